#pragma once

// Experiment configuration: JSON (comments allowed) describing the base
// system, the cocycle, the base point, numeric knobs and a pipeline of
// analysis steps. Everything is validated before any computation runs.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oslab/base_dynamics.hpp"
#include "oslab/cocycle.hpp"
#include "oslab/errors.hpp"
#include "oslab/operator_core.hpp"

namespace oslab {

/// Malformed or inconsistent configuration. `field` is a path such as
/// "pipeline[2].p"; `line` is 1-based, 0 when unknown.
class ConfigError : public Error {
public:
    ConfigError(std::string field, std::size_t line, const std::string& message)
        : Error(format(field, line, message)), field_(std::move(field)), line_(line) {}

    const std::string& field() const noexcept { return field_; }
    std::size_t line() const noexcept { return line_; }

private:
    static std::string format(const std::string& field, std::size_t line, const std::string& message) {
        std::string out = "config error";
        if (!field.empty()) out += " in field '" + field + "'";
        if (line > 0) out += " at line " + std::to_string(line);
        return out + ": " + message;
    }

    std::string field_;
    std::size_t line_;
};

enum class StepKind { spectrum, entropy, subadditive, classify, certify, perturb, probe, kill };

inline const char* to_string(StepKind k) {
    switch (k) {
        case StepKind::spectrum: return "spectrum";
        case StepKind::entropy: return "entropy";
        case StepKind::subadditive: return "subadditive";
        case StepKind::classify: return "classify";
        case StepKind::certify: return "certify";
        case StepKind::perturb: return "perturb";
        case StepKind::probe: return "probe";
        case StepKind::kill: return "kill";
    }
    return "?";
}

struct Knobs {
    int n = 2000;
    int horizon = 1000;
    double lambda_floor = std::log(1e-12);
    double group_tolerance = 1e-6;
    std::size_t compound_cap = default_compound_cap;
    int samples = 8;
};

struct StepConfig {
    std::string id;
    StepKind kind = StepKind::spectrum;
    std::string path;  // "pipeline[i]", for diagnostics
    int n = 0;         // iterations; 0 means knobs.n
    int horizon = 0;   // 0 means knobs.horizon
    int k = 0;
    int p = 0;
    int m = 0;
    int ell = 0;
    int ell_max = 0;
    int n_max = 0;
    int n_target = 0;
    int samples = 0;
    double delta = 0.0;
    double epsilon = 1e-3;
    double drop_margin = 1e-3;
    std::optional<double> xi;
    std::string uses;
    std::optional<Matrix> e1;
};

struct ExperimentConfig {
    nlohmann::json document;  // parsed config, seed override applied
    std::uint64_t hash = 0;
    std::uint64_t seed = 0;
    BaseSystem base = BaseSystem::periodic(1);
    CocycleField cocycle = CocycleField::constant(BaseSystem::periodic(1), Matrix::Identity(1, 1));
    BasePoint point;
    Knobs knobs;
    std::vector<StepConfig> steps;

    int n_for(const StepConfig& s) const { return s.n > 0 ? s.n : knobs.n; }
    int horizon_for(const StepConfig& s) const { return s.horizon > 0 ? s.horizon : knobs.horizon; }
    int samples_for(const StepConfig& s) const { return s.samples > 0 ? s.samples : knobs.samples; }
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Hash of the canonical serialization (sorted keys, no whitespace, no comments).
inline std::uint64_t config_hash(const nlohmann::json& doc) { return fnv1a64(doc.dump()); }

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace detail {

struct CountingIterator {
    using iterator_category = std::input_iterator_tag;
    using value_type = char;
    using difference_type = std::ptrdiff_t;
    using pointer = const char*;
    using reference = const char&;

    const char* p = nullptr;
    std::size_t* line = nullptr;

    reference operator*() const { return *p; }
    CountingIterator& operator++() {
        if (*p == '\n') ++*line;
        ++p;
        return *this;
    }
    CountingIterator operator++(int) {
        CountingIterator t = *this;
        ++*this;
        return t;
    }
    bool operator==(const CountingIterator& o) const { return p == o.p; }
    bool operator!=(const CountingIterator& o) const { return p != o.p; }
};

// SAX pass that records the source line of every key and array element.
class LineIndexer : public nlohmann::json_sax<nlohmann::json> {
public:
    explicit LineIndexer(const std::size_t* line) : line_(line) {}

    std::map<std::string, std::size_t> lines;
    std::string error;
    std::size_t error_line = 0;

    bool null() override { return value(); }
    bool boolean(bool) override { return value(); }
    bool number_integer(number_integer_t) override { return value(); }
    bool number_unsigned(number_unsigned_t) override { return value(); }
    bool number_float(number_float_t, const string_t&) override { return value(); }
    bool string(string_t&) override { return value(); }
    bool binary(binary_t&) override { return value(); }
    bool start_object(std::size_t) override { return open(false); }
    bool end_object() override { return close(); }
    bool start_array(std::size_t) override { return open(true); }
    bool end_array() override { return close(); }
    bool key(string_t& k) override {
        auto& f = stack_.back();
        f.current = f.prefix.empty() ? k : f.prefix + "." + k;
        lines[f.current] = *line_;
        return true;
    }
    bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& ex) override {
        error = ex.what();
        error_line = *line_;
        return false;
    }

private:
    struct Frame {
        bool array = false;
        std::size_t index = 0;
        std::string prefix;
        std::string current;
    };

    std::string here() const {
        if (stack_.empty()) return "";
        const auto& f = stack_.back();
        return f.array ? f.prefix + "[" + std::to_string(f.index) + "]" : f.current;
    }
    bool value() {
        if (!stack_.empty() && stack_.back().array) {
            lines[here()] = *line_;
            ++stack_.back().index;
        }
        return true;
    }
    bool open(bool array) {
        const std::string path = here();
        value();
        stack_.push_back({array, 0, path, ""});
        return true;
    }
    bool close() {
        stack_.pop_back();
        return true;
    }

    const std::size_t* line_;
    std::vector<Frame> stack_;
};

class Reader {
public:
    Reader(const nlohmann::json& root, std::map<std::string, std::size_t> lines)
        : root_(root), lines_(std::move(lines)) {}

    [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
        auto it = lines_.find(path);
        throw ConfigError(path, it == lines_.end() ? 0 : it->second, msg);
    }

    static std::string join(const std::string& parent, const std::string& key) {
        return parent.empty() ? key : parent + "." + key;
    }

    void allow(const nlohmann::json& obj, const std::string& path, std::initializer_list<const char*> keys) const {
        if (!obj.is_object()) fail(path, "expected an object");
        std::set<std::string> ok(keys.begin(), keys.end());
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (!ok.count(it.key())) fail(join(path, it.key()), "unknown field");
    }

    const nlohmann::json& require(const nlohmann::json& obj, const std::string& path, const char* key) const {
        if (!obj.contains(key)) fail(path.empty() ? key : path, std::string("missing required field '") + key + "'");
        return obj.at(key);
    }

    double number(const nlohmann::json& v, const std::string& path) const {
        if (!v.is_number()) fail(path, "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail(path, "expected a finite number");
        return d;
    }

    long long integer(const nlohmann::json& v, const std::string& path) const {
        if (!v.is_number_integer()) fail(path, "expected an integer");
        if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
            fail(path, "integer out of range");
        return v.get<long long>();
    }

    int int_in(const nlohmann::json& obj, const std::string& path, const char* key, int def, long long lo,
               long long hi) const {
        if (!obj.contains(key)) return def;
        const std::string p = join(path, key);
        const long long v = integer(obj.at(key), p);
        if (v < lo || v > hi) fail(p, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return static_cast<int>(v);
    }

    std::uint64_t u64(const nlohmann::json& v, const std::string& path) const {
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
            fail(path, "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    double positive(const nlohmann::json& obj, const std::string& path, const char* key,
                    std::optional<double> def) const {
        if (!obj.contains(key)) {
            if (!def) fail(path, std::string("missing required field '") + key + "'");
            return *def;
        }
        const std::string p = join(path, key);
        const double v = number(obj.at(key), p);
        if (!(v > 0.0)) fail(p, "must be > 0");
        return v;
    }

    // Row-major nested arrays, or {"diag": [...]}.
    Matrix matrix(const nlohmann::json& v, const std::string& path, int expected_dim) const {
        Matrix m;
        if (v.is_object()) {
            allow(v, path, {"diag"});
            const auto& d = require(v, path, "diag");
            const std::string dp = join(path, "diag");
            if (!d.is_array() || d.empty()) fail(dp, "expected a non-empty array");
            m = Matrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
            for (std::size_t i = 0; i < d.size(); ++i)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
                    number(d[i], dp + "[" + std::to_string(i) + "]");
        } else {
            m = rectangular(v, path);
            if (m.rows() != m.cols()) fail(path, "matrix must be square");
        }
        if (expected_dim > 0 && m.rows() != expected_dim)
            fail(path, "dimension " + std::to_string(m.rows()) + " does not match d = " +
                           std::to_string(expected_dim));
        return m;
    }

    Matrix rectangular(const nlohmann::json& v, const std::string& path) const {
        if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array of rows");
        const std::size_t rows = v.size();
        std::size_t cols = 0;
        for (std::size_t i = 0; i < rows; ++i) {
            const std::string rp = path + "[" + std::to_string(i) + "]";
            if (!v[i].is_array() || v[i].empty()) fail(rp, "expected a non-empty row");
            if (i == 0) cols = v[i].size();
            if (v[i].size() != cols) fail(rp, "rows have different lengths");
        }
        Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    number(v[i][j], path + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
        return m;
    }

    const nlohmann::json& root() const { return root_; }

private:
    const nlohmann::json& root_;
    std::map<std::string, std::size_t> lines_;
};

inline BaseSystem read_base(const Reader& r, const nlohmann::json& v, std::uint64_t seed) {
    const std::string path = "base";
    if (!v.is_object()) r.fail(path, "expected an object");
    const auto& kind = r.require(v, path, "kind");
    if (!kind.is_string()) r.fail("base.kind", "expected a string");
    const std::string k = kind.get<std::string>();
    if (k == "bernoulli") {
        r.allow(v, path, {"kind", "probabilities", "window"});
        const auto& q = r.require(v, path, "probabilities");
        if (!q.is_array() || q.empty()) r.fail("base.probabilities", "expected a non-empty array");
        std::vector<double> probs;
        double sum = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            const std::string p = "base.probabilities[" + std::to_string(i) + "]";
            probs.push_back(r.number(q[i], p));
            if (!(probs.back() > 0.0)) r.fail(p, "probabilities must be > 0");
            sum += probs.back();
        }
        if (std::abs(sum - 1.0) > 1e-12) r.fail("base.probabilities", "probabilities must sum to 1");
        return BaseSystem::bernoulli(probs, seed, r.int_in(v, path, "window", 64, 0, 1 << 16));
    }
    if (k == "rotation") {
        r.allow(v, path, {"kind", "alpha"});
        const double a = r.number(r.require(v, path, "alpha"), "base.alpha");
        if (!(a > 0.0 && a < 1.0)) r.fail("base.alpha", "alpha must lie in (0, 1)");
        return BaseSystem::rotation(a, seed);
    }
    if (k == "periodic") {
        r.allow(v, path, {"kind", "period"});
        if (!v.contains("period")) r.fail(path, "missing required field 'period'");
        return BaseSystem::periodic(r.int_in(v, path, "period", 1, 1, 1 << 24), seed);
    }
    r.fail("base.kind", "unknown base kind '" + k + "' (expected bernoulli, rotation or periodic)");
}

inline BasePoint read_point(const Reader& r, const nlohmann::json& v, const std::string& path,
                            const BaseSystem& base) {
    switch (base.kind()) {
        case BaseKind::periodic_orbit:
            r.allow(v, path, {"index"});
            return periodic_point(base, r.int_in(v, path, "index", 0, 0, base.period() - 1));
        case BaseKind::circle_rotation: {
            r.allow(v, path, {"angle"});
            const double a = r.number(r.require(v, path, "angle"), Reader::join(path, "angle"));
            if (!(a >= 0.0 && a < 1.0)) r.fail(Reader::join(path, "angle"), "angle must lie in [0, 1)");
            return rotation_point(base, a);
        }
        case BaseKind::bernoulli_shift: {
            r.allow(v, path, {"stream", "center"});
            const std::uint64_t stream = r.u64(r.require(v, path, "stream"), Reader::join(path, "stream"));
            long long center = 0;
            if (v.contains("center")) center = r.integer(v.at("center"), Reader::join(path, "center"));
            return shift_point(base, stream, center);
        }
    }
    r.fail(path, "unsupported base kind");
}

inline std::vector<Matrix> read_table(const Reader& r, const nlohmann::json& v, const std::string& path, int& dim) {
    if (!v.is_array() || v.empty()) r.fail(path, "expected a non-empty array of matrices");
    std::vector<Matrix> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(r.matrix(v[i], path + "[" + std::to_string(i) + "]", dim));
        dim = static_cast<int>(out.back().rows());
    }
    return out;
}

inline CocycleField read_cocycle(const Reader& r, const nlohmann::json& v, const BaseSystem& base) {
    const std::string path = "cocycle";
    if (!v.is_object()) r.fail(path, "expected an object");
    const auto& rule = r.require(v, path, "rule");
    if (!rule.is_string()) r.fail("cocycle.rule", "expected a string");
    const std::string kind = rule.get<std::string>();
    int dim = 0;
    CocycleRule parsed;
    if (kind == "constant") {
        r.allow(v, path, {"rule", "value", "tail_bound", "patches"});
        Matrix m = r.matrix(r.require(v, path, "value"), "cocycle.value", 0);
        dim = static_cast<int>(m.rows());
        parsed = ConstantRule{std::move(m)};
    } else if (kind == "per_symbol" || kind == "per_orbit_index") {
        r.allow(v, path, {"rule", "table", "tail_bound", "patches"});
        auto table = read_table(r, r.require(v, path, "table"), "cocycle.table", dim);
        if (kind == "per_symbol") {
            if (base.kind() != BaseKind::bernoulli_shift)
                r.fail("cocycle.rule", "per_symbol needs a bernoulli base");
            if (static_cast<int>(table.size()) != base.symbols())
                r.fail("cocycle.table", "need one matrix per symbol (" + std::to_string(base.symbols()) + ")");
            parsed = PerSymbolRule{std::move(table)};
        } else {
            if (base.kind() != BaseKind::periodic_orbit)
                r.fail("cocycle.rule", "per_orbit_index needs a periodic base");
            if (static_cast<int>(table.size()) != base.period())
                r.fail("cocycle.table", "need one matrix per orbit index (" + std::to_string(base.period()) + ")");
            parsed = PerOrbitIndexRule{std::move(table)};
        }
    } else if (kind == "fourier") {
        r.allow(v, path, {"rule", "constant", "terms", "tail_bound", "patches"});
        if (base.kind() != BaseKind::circle_rotation) r.fail("cocycle.rule", "fourier needs a rotation base");
        RotationFourierRule f;
        f.constant = r.matrix(r.require(v, path, "constant"), "cocycle.constant", 0);
        dim = static_cast<int>(f.constant.rows());
        if (v.contains("terms")) {
            const auto& terms = v.at("terms");
            if (!terms.is_array()) r.fail("cocycle.terms", "expected an array");
            for (std::size_t i = 0; i < terms.size(); ++i) {
                const std::string tp = "cocycle.terms[" + std::to_string(i) + "]";
                r.allow(terms[i], tp, {"frequency", "cos", "sin"});
                FourierTerm t;
                t.frequency = r.int_in(terms[i], tp, "frequency", 1, 1, 1 << 20);
                t.cos_coeff = terms[i].contains("cos") ? r.matrix(terms[i].at("cos"), tp + ".cos", dim)
                                                       : Matrix(Matrix::Zero(dim, dim));
                t.sin_coeff = terms[i].contains("sin") ? r.matrix(terms[i].at("sin"), tp + ".sin", dim)
                                                       : Matrix(Matrix::Zero(dim, dim));
                f.terms.push_back(std::move(t));
            }
        }
        parsed = std::move(f);
    } else {
        r.fail("cocycle.rule", "unknown rule '" + kind + "' (expected constant, per_symbol, per_orbit_index or fourier)");
    }
    double tail = 0.0;
    if (v.contains("tail_bound")) {
        tail = r.number(v.at("tail_bound"), "cocycle.tail_bound");
        if (tail < 0.0) r.fail("cocycle.tail_bound", "must be >= 0");
    }
    CocycleField field(base, std::move(parsed), tail);
    if (v.contains("patches")) {
        const auto& ps = v.at("patches");
        if (!ps.is_array()) r.fail("cocycle.patches", "expected an array");
        // Applied in reverse so the first listed patch wins, matching the field's rule.
        for (std::size_t i = ps.size(); i-- > 0;) {
            const std::string pp = "cocycle.patches[" + std::to_string(i) + "]";
            r.allow(ps[i], pp, {"point", "value"});
            const BasePoint at = read_point(r, r.require(ps[i], pp, "point"), pp + ".point", base);
            field = field.with_patch(at, r.matrix(r.require(ps[i], pp, "value"), pp + ".value", dim), "config");
        }
    }
    return field;
}

inline StepKind read_step_kind(const Reader& r, const nlohmann::json& v, const std::string& path) {
    const auto& s = r.require(v, path, "step");
    if (!s.is_string()) r.fail(path + ".step", "expected a string");
    static const std::map<std::string, StepKind> kinds = {
        {"spectrum", StepKind::spectrum}, {"entropy", StepKind::entropy},   {"subadditive", StepKind::subadditive},
        {"classify", StepKind::classify}, {"certify", StepKind::certify},   {"perturb", StepKind::perturb},
        {"probe", StepKind::probe},       {"kill", StepKind::kill}};
    auto it = kinds.find(s.get<std::string>());
    if (it == kinds.end()) r.fail(path + ".step", "unknown step '" + s.get<std::string>() + "'");
    return it->second;
}

}  // namespace detail

namespace detail {
inline void build_config(ExperimentConfig& cfg, std::map<std::string, std::size_t> lines,
                         std::optional<std::uint64_t> seed_override);
}  // namespace detail

/// Parses and validates a configuration document. `seed_override` replaces the
/// document's seed before anything is built, so the echo and hash reflect it.
inline ExperimentConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override = {}) {
    std::size_t line = 1;
    detail::LineIndexer index(&line);
    detail::CountingIterator first{text.data(), &line}, last{text.data() + text.size(), &line};
    if (!nlohmann::json::sax_parse(first, last, &index, nlohmann::json::input_format_t::json, true, true))
        throw ConfigError("", index.error_line, index.error);

    ExperimentConfig cfg;
    cfg.document = nlohmann::json::parse(text, nullptr, true, true);
    try {
        detail::build_config(cfg, std::move(index.lines), seed_override);
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidInput& e) {
        throw ConfigError("", 0, e.what());
    }
    return cfg;
}

namespace detail {

inline void build_config(ExperimentConfig& cfg, std::map<std::string, std::size_t> lines,
                         std::optional<std::uint64_t> seed_override) {
    if (seed_override) cfg.document["seed"] = *seed_override;
    const nlohmann::json& doc = cfg.document;
    Reader r(doc, std::move(lines));
    r.allow(doc, "", {"seed", "base", "cocycle", "point", "knobs", "pipeline", "description"});
    if (doc.contains("description") && !doc.at("description").is_string())
        r.fail("description", "expected a string");

    cfg.seed = doc.contains("seed") ? r.u64(doc.at("seed"), "seed") : 0;
    cfg.base = detail::read_base(r, r.require(doc, "", "base"), cfg.seed);
    cfg.cocycle = detail::read_cocycle(r, r.require(doc, "", "cocycle"), cfg.base);
    const int d = cfg.cocycle.dim();

    if (doc.contains("point"))
        cfg.point = detail::read_point(r, doc.at("point"), "point", cfg.base);
    else
        cfg.point = cfg.base.is_periodic() ? periodic_point(cfg.base, 0) : sample_measure(cfg.base, 1).front();

    if (doc.contains("knobs")) {
        const auto& k = doc.at("knobs");
        r.allow(k, "knobs", {"n", "horizon", "lambda_floor", "group_tolerance", "compound_cap", "samples"});
        cfg.knobs.n = r.int_in(k, "knobs", "n", cfg.knobs.n, 2, 100000000);
        cfg.knobs.horizon = r.int_in(k, "knobs", "horizon", cfg.knobs.horizon, 1, 100000000);
        cfg.knobs.samples = r.int_in(k, "knobs", "samples", cfg.knobs.samples, 1, 1000000);
        cfg.knobs.compound_cap =
            static_cast<std::size_t>(r.int_in(k, "knobs", "compound_cap", 10000, 1, 1 << 30));
        if (k.contains("lambda_floor")) cfg.knobs.lambda_floor = r.number(k.at("lambda_floor"), "knobs.lambda_floor");
        if (k.contains("group_tolerance"))
            cfg.knobs.group_tolerance = r.positive(k, "knobs", "group_tolerance", std::nullopt);
    }

    if (doc.contains("pipeline")) {
        const auto& pl = doc.at("pipeline");
        if (!pl.is_array()) r.fail("pipeline", "expected an array of steps");
        std::map<std::string, StepKind> seen;
        for (std::size_t i = 0; i < pl.size(); ++i) {
            const std::string path = "pipeline[" + std::to_string(i) + "]";
            const auto& v = pl[i];
            if (!v.is_object()) r.fail(path, "expected an object");
            StepConfig s;
            s.path = path;
            s.kind = detail::read_step_kind(r, v, path);
            s.id = std::string(to_string(s.kind)) + "_" + std::to_string(i);
            if (v.contains("id")) {
                if (!v.at("id").is_string() || v.at("id").get<std::string>().empty())
                    r.fail(path + ".id", "expected a non-empty string");
                s.id = v.at("id").get<std::string>();
            }
            if (seen.count(s.id)) r.fail(path + ".id", "duplicate step id '" + s.id + "'");
            s.n = r.int_in(v, path, "n", 0, 2, 100000000);
            s.horizon = r.int_in(v, path, "horizon", 0, 1, 100000000);
            s.samples = r.int_in(v, path, "samples", 0, 1, 1000000);
            switch (s.kind) {
                case StepKind::spectrum:
                    r.allow(v, path, {"step", "id", "n", "k"});
                    s.k = r.int_in(v, path, "k", d, 1, d);
                    break;
                case StepKind::entropy:
                    r.allow(v, path, {"step", "id", "n", "p"});
                    if (!v.contains("p")) r.fail(path, "missing required field 'p'");
                    s.p = r.int_in(v, path, "p", 1, 1, d);
                    break;
                case StepKind::subadditive:
                    r.allow(v, path, {"step", "id", "p", "n_max", "samples"});
                    if (!v.contains("p")) r.fail(path, "missing required field 'p'");
                    s.p = r.int_in(v, path, "p", 1, 1, d);
                    s.n_max = r.int_in(v, path, "n_max", 50, 2, 1000000);
                    break;
                case StepKind::classify:
                    r.allow(v, path, {"step", "id", "n", "horizon", "p", "m"});
                    if (!v.contains("p") || !v.contains("m")) r.fail(path, "classify needs 'p' and 'm'");
                    if (d < 2) r.fail(path, "classify needs d >= 2");
                    s.p = r.int_in(v, path, "p", 1, 1, d - 1);
                    s.m = r.int_in(v, path, "m", 1, 1, 100000000);
                    break;
                case StepKind::certify: {
                    r.allow(v, path, {"step", "id", "n", "horizon", "p", "ell", "ell_max", "uses", "e1"});
                    if (d < 2) r.fail(path, "certify needs d >= 2");
                    if (v.contains("ell") == v.contains("ell_max"))
                        r.fail(path, "certify needs exactly one of 'ell' or 'ell_max'");
                    s.ell = r.int_in(v, path, "ell", 0, 1, 100000000);
                    s.ell_max = r.int_in(v, path, "ell_max", 0, 1, 100000);
                    if (v.contains("e1")) {
                        Matrix e1 = r.rectangular(v.at("e1"), path + ".e1");
                        if (e1.rows() != d || e1.cols() < 1 || e1.cols() >= d)
                            r.fail(path + ".e1", "E1 basis must be d x p with 1 <= p < d (row-major)");
                        s.e1 = e1;
                        s.p = static_cast<int>(e1.cols());
                        if (v.contains("p") && r.int_in(v, path, "p", 1, 1, d - 1) != s.p)
                            r.fail(path + ".p", "p does not match the E1 basis");
                    } else {
                        if (!v.contains("p")) r.fail(path, "missing required field 'p'");
                        s.p = r.int_in(v, path, "p", 1, 1, d - 1);
                    }
                    if (v.contains("uses")) {
                        if (!v.at("uses").is_string()) r.fail(path + ".uses", "expected a step id");
                        s.uses = v.at("uses").get<std::string>();
                        auto it = seen.find(s.uses);
                        if (it == seen.end()) r.fail(path + ".uses", "no earlier step with id '" + s.uses + "'");
                        if (it->second != StepKind::spectrum)
                            r.fail(path + ".uses", "step '" + s.uses + "' is not a spectrum step");
                    }
                    break;
                }
                case StepKind::perturb:
                    r.allow(v, path, {"step", "id", "n", "horizon", "p", "m", "delta", "epsilon", "xi", "samples"});
                    if (d < 2) r.fail(path, "perturb needs d >= 2");
                    if (!v.contains("p") || !v.contains("m")) r.fail(path, "perturb needs 'p' and 'm'");
                    s.p = r.int_in(v, path, "p", 1, 1, d - 1);
                    s.m = r.int_in(v, path, "m", 1, 1, 100000000);
                    s.delta = r.positive(v, path, "delta", std::nullopt);
                    s.epsilon = r.positive(v, path, "epsilon", 1e-3);
                    if (v.contains("xi")) s.xi = r.number(v.at("xi"), path + ".xi");
                    break;
                case StepKind::probe:
                    r.allow(v, path, {"step", "id", "n", "horizon", "p", "m", "delta", "epsilon", "xi", "samples",
                                      "drop_margin"});
                    if (d < 2) r.fail(path, "probe needs d >= 2");
                    s.p = r.int_in(v, path, "p", 0, 1, d - 1);
                    s.m = r.int_in(v, path, "m", 0, 1, 100000000);
                    s.delta = r.positive(v, path, "delta", 0.1);
                    s.epsilon = r.positive(v, path, "epsilon", 1e-3);
                    s.drop_margin = r.positive(v, path, "drop_margin", 1e-3);
                    if (v.contains("xi")) s.xi = r.number(v.at("xi"), path + ".xi");
                    break;
                case StepKind::kill:
                    r.allow(v, path, {"step", "id", "n", "p", "n_target", "epsilon"});
                    if (!v.contains("p")) r.fail(path, "missing required field 'p'");
                    s.p = r.int_in(v, path, "p", 1, 1, d);
                    s.n_target = r.int_in(v, path, "n_target", 64, 1, 100000000);
                    s.epsilon = r.positive(v, path, "epsilon", std::nullopt);
                    break;
            }
            seen[s.id] = s.kind;
            cfg.steps.push_back(std::move(s));
        }
    }
    cfg.hash = config_hash(cfg.document);
}

}  // namespace detail

}  // namespace oslab
