#pragma once

// Pipeline execution and report/plot serialization for the command line tool.

#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oslab/config.hpp"
#include "oslab/domination.hpp"
#include "oslab/lyapunov.hpp"
#include "oslab/perturbation.hpp"

namespace oslab {

inline constexpr const char* tool_version = "1.0.0";

using ordered_json = nlohmann::ordered_json;

/// Requested plot series is not in the report.
class SeriesMissing : public Error {
public:
    using Error::Error;
};

namespace report {

/// Finite reals as numbers; -inf, inf and nan as string tokens.
inline ordered_json real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    return v;
}

inline double real_from(const ordered_json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw SeriesMissing("report value is not a real number");
}

inline ordered_json reals(const std::vector<double>& v) {
    ordered_json a = ordered_json::array();
    for (double x : v) a.push_back(real(x));
    return a;
}

inline ordered_json vec(const Vector& v) {
    ordered_json a = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(real(v(i)));
    return a;
}

inline ordered_json mat(const Matrix& m) {
    ordered_json a = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i).transpose()));
    return a;
}

inline ordered_json spectrum(const LyapunovSpectrum& s, bool with_history) {
    ordered_json j;
    j["exponents"] = reals(s.raw);
    ordered_json groups = ordered_json::array();
    for (const auto& g : s.finite) groups.push_back({{"value", real(g.value)}, {"multiplicity", g.multiplicity}});
    j["groups"] = groups;
    j["minus_infinity_dim"] = s.minus_infinity_dim;
    j["untracked_dim"] = s.untracked_dim;
    j["iterations"] = s.iterations;
    j["residual"] = real(s.residual);
    j["group_tolerance"] = real(s.group_tolerance);
    j["tail_bound"] = real(s.tail_bound);
    if (with_history) {
        ordered_json h = ordered_json::array();
        for (const auto& c : s.history) h.push_back({{"iteration", c.iteration}, {"estimates", reals(c.estimates)}});
        j["history"] = h;
    }
    return j;
}

inline ordered_json certificate(const DominationCertificate& c) {
    ordered_json j;
    j["verdict"] = to_string(c.verdict);
    j["p"] = c.index_p;
    j["ell"] = c.ell;
    j["horizon"] = c.horizon;
    j["theta"] = real(c.theta);
    j["gamma"] = real(c.gamma);
    j["max_ratio"] = real(c.max_ratio);
    j["implied_ell_step_bound"] = real(c.implied_ell_step_bound());
    if (c.witness) {
        j["witness"] = {{"orbit_index", c.witness->orbit_index},
                        {"u", vec(c.witness->u)},
                        {"v", vec(c.witness->v)},
                        {"value", real(c.witness->value)}};
    } else {
        j["witness"] = nullptr;
    }
    return j;
}

inline ordered_json splitting(const OseledetsSplitting& s, const char* source) {
    return {{"source", source},
            {"p", s.index_p},
            {"gap", real(s.gap)},
            {"invariance_defect", real(s.invariance_defect)},
            {"e1", mat(s.e1)}};
}

inline ordered_json patches(const CocycleField& before, const CocycleField& after) {
    ordered_json a = ordered_json::array();
    const std::size_t added = after.patches().size() - before.patches().size();
    // Newest patches sit in front; list them in application order.
    for (std::size_t i = added; i-- > 0;) {
        const auto& p = after.patches()[i];
        a.push_back({{"point", p.at.describe()}, {"origin", p.origin}, {"value", mat(p.value)}});
    }
    return a;
}

}  // namespace report

namespace detail {

inline SpectrumOptions spectrum_options(const ExperimentConfig& cfg) {
    SpectrumOptions o;
    o.minus_infinity_floor = cfg.knobs.lambda_floor;
    o.group_tolerance_min = cfg.knobs.group_tolerance;
    return o;
}

inline std::vector<BasePoint> sample_points(const ExperimentConfig& cfg, int count) {
    if (cfg.base.is_periodic()) {
        std::vector<BasePoint> out;
        for (int i = 0; i < cfg.base.period(); ++i) out.push_back(periodic_point(cfg.base, i));
        return out;
    }
    std::vector<BasePoint> out{cfg.point};
    for (const auto& x : sample_measure(cfg.base, count))
        if (!(x == cfg.point) && static_cast<int>(out.size()) < count) out.push_back(x);
    return out;
}

inline ordered_json run_step(const ExperimentConfig& cfg, const StepConfig& s,
                             const std::map<std::string, const StepConfig*>& by_id) {
    const CocycleField& c = cfg.cocycle;
    const BasePoint& x = cfg.point;
    const SpectrumOptions sopt = spectrum_options(cfg);
    const int n = cfg.n_for(s);
    ordered_json j;
    j["id"] = s.id;
    j["step"] = to_string(s.kind);
    switch (s.kind) {
        case StepKind::spectrum: {
            j["k"] = s.k;
            j["result"] = report::spectrum(spectrum(c, x, n, s.k, sopt), true);
            break;
        }
        case StepKind::entropy: {
            j["p"] = s.p;
            const double e = entropy(c, s.p, x, n, sopt);
            const double w = exterior_top_exponent(c, x, s.p, n, sopt, cfg.knobs.compound_cap);
            j["entropy"] = report::real(e);
            j["exterior_top_exponent"] = report::real(w);
            j["difference"] = report::real(std::isfinite(e) && std::isfinite(w) ? std::abs(e - w) : 0.0);
            break;
        }
        case StepKind::subadditive: {
            j["p"] = s.p;
            j["n_max"] = s.n_max;
            const auto seq = subadditive_sequence(c, s.p, s.n_max, sample_points(cfg, cfg.samples_for(s)),
                                                  cfg.knobs.compound_cap);
            std::vector<double> per_n;
            for (std::size_t i = 0; i < seq.a.size(); ++i) per_n.push_back(seq.a[i] / static_cast<double>(i + 1));
            j["a"] = report::reals(seq.a);
            j["a_over_n"] = report::reals(per_n);
            j["running_inf"] = report::reals(seq.running_inf);
            break;
        }
        case StepKind::classify: {
            j["p"] = s.p;
            j["m"] = s.m;
            const auto cl = classify_point(c, x, s.p, s.m, n, cfg.horizon_for(s), sopt);
            j["class"] = to_string(cl.kind);
            j["gap"] = report::real(cl.gap);
            j["exponents"] = report::reals(cl.spectrum.raw);
            j["certificate"] = cl.certificate ? report::certificate(*cl.certificate) : ordered_json(nullptr);
            break;
        }
        case StepKind::certify: {
            j["p"] = s.p;
            int n_split = n;
            if (!s.uses.empty()) {
                j["uses"] = s.uses;
                n_split = cfg.n_for(*by_id.at(s.uses));
            }
            OseledetsSplitting split;
            const char* source = "oseledets";
            if (s.e1) {
                split = declared_splitting(x, *s.e1);
                source = "declared";
            } else {
                try {
                    split = oseledets_splitting(c, x, s.p, n_split, sopt);
                } catch (const GapMissing& g) {
                    j["splitting"] = nullptr;
                    j["verdict"] = to_string(Verdict::no_gap);
                    j["gap"] = report::real(g.gap());
                    break;
                }
            }
            j["splitting"] = report::splitting(split, source);
            const int horizon = effective_horizon(c.base(), cfg.horizon_for(s));
            if (s.ell > 0) {
                const auto cert = check_ell_domination(c, x, split, s.ell, horizon);
                j["verdict"] = to_string(cert.verdict);
                j["certificate"] = report::certificate(cert);
            } else {
                const auto r = find_min_ell(c, x, split, s.ell_max, horizon);
                j["ell_max"] = s.ell_max;
                j["ell_star"] = r.ell ? ordered_json(*r.ell) : ordered_json(nullptr);
                j["verdict"] = to_string(r.certificate.verdict);
                j["certificate"] = report::certificate(r.certificate);
            }
            break;
        }
        case StepKind::perturb: {
            PerturbationConfig pc;
            pc.sample_count = cfg.samples_for(s);
            pc.n_spectrum = n;
            pc.horizon = cfg.horizon_for(s);
            pc.xi = s.xi;
            pc.spectrum = sopt;
            const auto rep = global_perturbation(c, s.p, s.m, s.delta, s.epsilon, pc);
            j["p"] = s.p;
            j["m"] = s.m;
            j["delta"] = report::real(s.delta);
            j["epsilon"] = report::real(s.epsilon);
            j["status"] = rep.status;
            ordered_json pts = ordered_json::array();
            for (const auto& p : rep.points)
                pts.push_back({{"index", p.point_index},
                               {"point", p.point.describe()},
                               {"class", to_string(p.classification)},
                               {"perturbation", to_string(p.kind)},
                               {"patches", p.patches},
                               {"detail", p.detail}});
            j["points"] = pts;
            j["patches"] = report::patches(c, rep.field);
            j["exponents_before"] = report::reals(rep.exponents_before);
            j["le_before"] = report::real(rep.le_before);
            j["le_after"] = report::real(rep.le_after);
            j["bound"] = report::real(rep.bound);
            j["bound_met"] = rep.bound_met;
            j["distance"] = report::real(rep.distance);
            j["within_delta"] = rep.distance <= s.delta;
            break;
        }
        case StepKind::probe: {
            ProbeConfig pc;
            pc.sample_count = cfg.samples_for(s);
            pc.p = s.p;
            pc.m = s.m;
            pc.delta = s.delta;
            pc.epsilon = s.epsilon;
            pc.drop_margin = s.drop_margin;
            pc.perturbation.n_spectrum = n;
            pc.perturbation.horizon = cfg.horizon_for(s);
            pc.perturbation.xi = s.xi;
            pc.perturbation.spectrum = sopt;
            const auto rep = dichotomy_probe(c, pc);
            ordered_json recs = ordered_json::array();
            std::map<std::string, int> counts{{"NULL", 0}, {"dominated", 0}, {"perturbed", 0}, {"no_gap", 0}};
            for (const auto& r : rep.records) {
                ordered_json o;
                o["index"] = r.point_index;
                o["point"] = r.point;
                o["branch"] = to_string(r.branch);
                o["exponents"] = report::reals(r.exponents);
                o["p"] = r.p;
                o["m"] = r.m;
                o["gap_formula_n"] = r.gap_formula_n ? ordered_json(*r.gap_formula_n) : ordered_json(nullptr);
                o["gap_formula_certified"] =
                    r.gap_formula_certified ? ordered_json(*r.gap_formula_certified) : ordered_json(nullptr);
                o["certificate"] = r.certificate ? report::certificate(*r.certificate) : ordered_json(nullptr);
                if (r.branch == ProbeBranch::perturbed) {
                    o["class"] = to_string(r.classification);
                    o["perturbation"] = to_string(r.perturbation);
                    o["delta"] = report::real(r.delta);
                    o["distance"] = report::real(r.distance);
                    o["le_before"] = report::real(r.le_before);
                    o["le_after"] = report::real(r.le_after);
                    o["drop"] = report::real(r.le_before - r.le_after);
                    o["bound"] = report::real(r.bound);
                    o["bound_met"] = r.bound_met;
                    o["drop_met"] = r.drop_met;
                }
                o["detail"] = r.detail;
                ++counts[to_string(r.branch)];
                recs.push_back(std::move(o));
            }
            j["records"] = recs;
            ordered_json summary;
            for (const char* b : {"NULL", "dominated", "perturbed", "no_gap"}) summary[b] = counts[b];
            j["branches"] = summary;
            break;
        }
        case StepKind::kill: {
            const auto k = kill_direction(c, x, s.p, s.n_target, s.epsilon, n, sopt);
            j["p"] = s.p;
            j["n_target"] = s.n_target;
            j["epsilon"] = report::real(s.epsilon);
            j["site"] = k.report.site;
            j["site_point"] = k.report.site_point.describe();
            j["v"] = report::vec(k.report.v);
            j["norm_av"] = report::real(k.report.norm_av);
            j["distance"] = report::real(k.report.distance);
            j["rank"] = k.report.rank;
            j["wedge_norm"] = report::real(k.report.wedge_norm);
            break;
        }
    }
    return j;
}

}  // namespace detail

/// Runs every pipeline step in order. The "timing" member is the only part
/// of the report that depends on anything but the configuration.
inline ordered_json run_experiment(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    ordered_json out;
    out["tool"] = "oslab";
    out["version"] = tool_version;
    out["config_hash"] = hex64(cfg.hash);
    out["config"] = ordered_json::parse(cfg.document.dump());
    out["point"] = cfg.point.describe();
    std::map<std::string, const StepConfig*> by_id;
    ordered_json steps = ordered_json::array();
    for (const auto& s : cfg.steps) {
        steps.push_back(detail::run_step(cfg, s, by_id));
        by_id[s.id] = &s;
    }
    out["steps"] = steps;
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    out["timing"] = {{"elapsed_ms", ms}};
    return out;
}

/// Report without its timing member, as the byte string compared for determinism.
inline std::string report_body(const ordered_json& report) {
    ordered_json copy = report;
    copy.erase("timing");
    return copy.dump(2);
}

namespace detail {

inline const ordered_json& find_step(const ordered_json& report, const std::string& id,
                                     std::initializer_list<const char*> kinds, const std::string& series) {
    if (!report.contains("steps") || !report.at("steps").is_array())
        throw SeriesMissing("series '" + series + "': report has no steps");
    for (const auto& s : report.at("steps")) {
        if (!id.empty() && s.value("id", "") != id) continue;
        for (const char* k : kinds)
            if (s.value("step", "") == k) return s;
        if (!id.empty()) break;
    }
    throw SeriesMissing("series '" + series + "' not found in report" + (id.empty() ? "" : " for step '" + id + "'"));
}

inline std::string fmt(double v) {
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace detail

/// Tab-separated table with a header row for one series of a report.
inline std::string plot_table(const ordered_json& report, const std::string& series, const std::string& step_id = "") {
    std::ostringstream os;
    if (series == "exponent_convergence") {
        const auto& s = detail::find_step(report, step_id, {"spectrum"}, series);
        const auto& hist = s.at("result").at("history");
        if (hist.empty()) throw SeriesMissing("series '" + series + "': empty history");
        os << "iteration";
        for (std::size_t i = 0; i < hist.front().at("estimates").size(); ++i) os << "\tlambda_" << i + 1;
        os << "\n";
        for (const auto& h : hist) {
            os << h.at("iteration").get<int>();
            for (const auto& e : h.at("estimates")) os << "\t" << detail::fmt(report::real_from(e));
            os << "\n";
        }
    } else if (series == "a_n_over_n") {
        const auto& s = detail::find_step(report, step_id, {"subadditive"}, series);
        const auto& a = s.at("a_over_n");
        const auto& inf = s.at("running_inf");
        os << "n\ta_n_over_n\trunning_inf\n";
        for (std::size_t i = 0; i < a.size(); ++i)
            os << i + 1 << "\t" << detail::fmt(report::real_from(a[i])) << "\t"
               << detail::fmt(report::real_from(inf[i])) << "\n";
    } else if (series == "entropy_before_after") {
        const auto& s = detail::find_step(report, step_id, {"perturb", "probe"}, series);
        const ordered_json* src = nullptr;
        if (s.at("step") == "perturb") {
            src = &s;
        } else {
            for (const auto& r : s.at("records"))
                if (r.at("branch") == "perturbed") {
                    src = &r;
                    break;
                }
        }
        if (!src) throw SeriesMissing("series '" + series + "': no perturbed record in probe step");
        os << "stage\tentropy\n";
        os << "before\t" << detail::fmt(report::real_from(src->at("le_before"))) << "\n";
        os << "after\t" << detail::fmt(report::real_from(src->at("le_after"))) << "\n";
    } else {
        throw SeriesMissing("unknown series '" + series +
                            "' (expected exponent_convergence, a_n_over_n or entropy_before_after)");
    }
    return os.str();
}

}  // namespace oslab
