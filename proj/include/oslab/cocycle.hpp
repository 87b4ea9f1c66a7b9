#pragma once

// Cocycle fields x -> A(x) over a base system, their random products, the
// sup-distance between fields, and the log+ integrability estimate.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "oslab/base_dynamics.hpp"
#include "oslab/operator_core.hpp"

namespace oslab {

struct ConstantRule {
    Matrix value;
};

/// Reads the symbol at the window center.
struct PerSymbolRule {
    std::vector<Matrix> table;
};

struct PerOrbitIndexRule {
    std::vector<Matrix> table;
};

struct FourierTerm {
    int frequency = 1;
    Matrix cos_coeff;
    Matrix sin_coeff;
};

/// A(t) = c0 + sum_k cos(2 pi k t) C_k + sin(2 pi k t) S_k, t the circle angle.
struct RotationFourierRule {
    Matrix constant;
    std::vector<FourierTerm> terms;
};

using CocycleRule = std::variant<ConstantRule, PerSymbolRule, PerOrbitIndexRule, RotationFourierRule>;

/// Pointwise override installed by a perturbation. Matches one base point exactly.
struct Patch {
    BasePoint at;
    Matrix value;
    std::string origin;
};

class CocycleField {
public:
    CocycleField(BaseSystem base, CocycleRule rule, double tail_bound = 0.0)
        : base_(std::move(base)), rule_(std::move(rule)), tail_bound_(tail_bound) {
        dim_ = validate();
    }

    static CocycleField constant(BaseSystem base, Matrix a) {
        return CocycleField(std::move(base), ConstantRule{std::move(a)});
    }

    const BaseSystem& base() const noexcept { return base_; }
    const CocycleRule& rule() const noexcept { return rule_; }
    int dim() const noexcept { return dim_; }
    double tail_bound() const noexcept { return tail_bound_; }
    const std::vector<Patch>& patches() const noexcept { return patches_; }

    /// A(x) from the base rule alone, ignoring patches.
    Matrix base_value(const BasePoint& x) const {
        Matrix m = std::visit([&](const auto& r) { return eval_rule(r, x); }, rule_);
        if (compound_power_ > 1) return compound_matrix(m, compound_power_, compound_cap_);
        return m;
    }

    /// A(x): the first matching patch wins, otherwise the base rule.
    Matrix value(const BasePoint& x) const {
        for (const auto& p : patches_)
            if (p.at == x) return p.value;
        return base_value(x);
    }

    TruncatedOperator evaluate(const BasePoint& x) const { return TruncatedOperator(value(x), tail_bound_); }

    const Patch* patch_at(const BasePoint& x) const {
        for (const auto& p : patches_)
            if (p.at == x) return &p;
        return nullptr;
    }

    /// New field with an override at `at`; it shadows any earlier patch there.
    CocycleField with_patch(const BasePoint& at, Matrix value, std::string origin) const {
        if (!belongs_to(base_, at)) throw InvalidInput("with_patch: point does not belong to the base system");
        if (value.rows() != dim_ || value.cols() != dim_) throw InvalidInput("with_patch: dimension mismatch");
        if (!value.allFinite()) throw InvalidInput("with_patch: non-finite override");
        CocycleField out = *this;
        out.patches_.insert(out.patches_.begin(), Patch{at, std::move(value), std::move(origin)});
        return out;
    }

    /// The compound cocycle x -> wedge^p A(x).
    CocycleField exterior(int p, std::size_t cap = default_compound_cap) const {
        if (p < 1 || p > dim_) throw InvalidInput("exterior: p out of range");
        const std::size_t n = binomial(static_cast<std::size_t>(dim_), static_cast<std::size_t>(p));
        if (n > cap) throw CapacityError(n, cap);
        if (p == 1) return *this;
        CocycleField out = *this;
        auto lift = [&](const Matrix& m) { return compound_matrix(m, p, cap); };
        std::visit(
            [&](auto& r) {
                using R = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<R, ConstantRule>) {
                    r.value = lift(r.value);
                } else if constexpr (std::is_same_v<R, PerSymbolRule> || std::is_same_v<R, PerOrbitIndexRule>) {
                    for (auto& m : r.table) m = lift(m);
                } else {
                    out.compound_power_ = p * compound_power_;
                    out.compound_cap_ = cap;
                }
            },
            out.rule_);
        if (compound_power_ > 1 && !std::holds_alternative<RotationFourierRule>(rule_))
            throw InvalidInput("exterior: nested compound of a table rule");
        for (auto& patch : out.patches_) patch.value = lift(patch.value);
        out.dim_ = static_cast<int>(n);
        out.tail_bound_ = 0.0;
        if (tail_bound_ > 0.0) {
            double sup = 0.0;
            for_each_finite_value([&](const Matrix& m) { sup = std::max(sup, spectral_norm(m)); });
            out.tail_bound_ = std::pow(sup + tail_bound_, p) - std::pow(sup, p);
        }
        return out;
    }

    /// True when the base rule takes finitely many values that can be enumerated.
    bool finitely_valued() const noexcept { return !std::holds_alternative<RotationFourierRule>(rule_); }

    /// Visits each distinct base-rule value (only for finitely valued rules).
    template <class F>
    void for_each_finite_value(F&& f) const {
        std::visit(
            [&](const auto& r) {
                using R = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<R, ConstantRule>) {
                    f(r.value);
                } else if constexpr (std::is_same_v<R, PerSymbolRule> || std::is_same_v<R, PerOrbitIndexRule>) {
                    for (const auto& m : r.table) f(m);
                }
            },
            rule_);
    }

private:
    Matrix eval_rule(const ConstantRule& r, const BasePoint&) const { return r.value; }
    Matrix eval_rule(const PerSymbolRule& r, const BasePoint& x) const {
        return r.table[static_cast<std::size_t>(x.center_symbol())];
    }
    Matrix eval_rule(const PerOrbitIndexRule& r, const BasePoint& x) const {
        return r.table[static_cast<std::size_t>(x.index)];
    }
    Matrix eval_rule(const RotationFourierRule& r, const BasePoint& x) const {
        const double t = x.angle();
        Matrix m = r.constant;
        for (const auto& term : r.terms) {
            const double w = 2.0 * std::numbers::pi * term.frequency * t;
            m += std::cos(w) * term.cos_coeff + std::sin(w) * term.sin_coeff;
        }
        return m;
    }

    int validate() const {
        int d = -1;
        auto check = [&](const Matrix& m, const char* what) {
            if (m.rows() == 0 || m.rows() != m.cols())
                throw InvalidInput(std::string("cocycle: ") + what + " must be a non-empty square matrix");
            if (!m.allFinite()) throw InvalidInput(std::string("cocycle: ") + what + " has non-finite entries");
            if (d < 0) d = static_cast<int>(m.rows());
            if (m.rows() != d) throw InvalidInput(std::string("cocycle: inconsistent dimension in ") + what);
        };
        std::visit(
            [&](const auto& r) {
                using R = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<R, ConstantRule>) {
                    check(r.value, "constant value");
                } else if constexpr (std::is_same_v<R, PerSymbolRule>) {
                    if (base_.kind() != BaseKind::bernoulli_shift)
                        throw InvalidInput("cocycle: per_symbol rule needs a bernoulli_shift base");
                    if (static_cast<int>(r.table.size()) != base_.symbols())
                        throw InvalidInput("cocycle: per_symbol table size must equal the number of symbols");
                    for (const auto& m : r.table) check(m, "per_symbol entry");
                } else if constexpr (std::is_same_v<R, PerOrbitIndexRule>) {
                    if (base_.kind() != BaseKind::periodic_orbit)
                        throw InvalidInput("cocycle: per_orbit_index rule needs a periodic_orbit base");
                    if (static_cast<int>(r.table.size()) != base_.period())
                        throw InvalidInput("cocycle: per_orbit_index table size must equal the period");
                    for (const auto& m : r.table) check(m, "per_orbit_index entry");
                } else {
                    if (base_.kind() != BaseKind::circle_rotation)
                        throw InvalidInput("cocycle: rotation_fourier rule needs a circle_rotation base");
                    check(r.constant, "fourier constant term");
                    for (const auto& t : r.terms) {
                        check(t.cos_coeff, "fourier cos coefficient");
                        check(t.sin_coeff, "fourier sin coefficient");
                    }
                }
            },
            rule_);
        if (!(tail_bound_ >= 0.0) || !std::isfinite(tail_bound_))
            throw InvalidInput("cocycle: tail_bound must be finite and >= 0");
        return d;
    }

    BaseSystem base_;
    CocycleRule rule_;
    double tail_bound_ = 0.0;
    int dim_ = 0;
    int compound_power_ = 1;
    std::size_t compound_cap_ = default_compound_cap;
    std::vector<Patch> patches_;
};

/// A^n(x) = A(f^{n-1}x) ... A(x), multiplied out explicitly.
inline Matrix random_product(const CocycleField& c, const BasePoint& x, int n) {
    if (n < 0) throw InvalidInput("random_product: n must be >= 0");
    Matrix p = Matrix::Identity(c.dim(), c.dim());
    BasePoint y = x;
    for (int j = 0; j < n; ++j) {
        p = c.value(y) * p;
        if (!p.allFinite())
            throw NumericOverflow("random_product: raw product overflowed at step " + std::to_string(j + 1) +
                                  "; use the scaled QR accumulation (lyapunov::spectrum)");
        y = step(c.base(), y);
    }
    return p;
}

/// sup-distance of two fields, exact wherever the values are enumerable:
/// the whole orbit for periodic bases, every symbol for locally constant
/// shift rules, and every patch point of either field. `sample` adds points.
inline double cocycle_distance(const CocycleField& a, const CocycleField& b, const std::vector<BasePoint>& sample) {
    if (a.dim() != b.dim()) throw InvalidInput("cocycle_distance: dimension mismatch");
    if (a.base().kind() != b.base().kind()) throw InvalidInput("cocycle_distance: different base systems");
    double d = 0.0;
    auto at = [&](const BasePoint& x) { d = std::max(d, spectral_norm(a.value(x) - b.value(x))); };
    for (const auto& x : sample) at(x);
    for (const auto& p : a.patches()) at(p.at);
    for (const auto& p : b.patches()) at(p.at);
    const BaseSystem& s = a.base();
    if (s.is_periodic() && s.period() == b.base().period()) {
        for (int i = 0; i < s.period(); ++i) at(periodic_point(s, i));
    } else if (s.kind() == BaseKind::bernoulli_shift && a.finitely_valued() && b.finitely_valued()) {
        // Base rules depend on the center symbol only; one representative per symbol,
        // taken off every patch (patch points were handled above).
        BasePoint rep = shift_point(s, 0, 0);
        for (int sym = 0; sym < s.symbols(); ++sym) {
            rep.window[rep.window.size() / 2] = sym;
            d = std::max(d, spectral_norm(a.base_value(rep) - b.base_value(rep)));
        }
    } else if (std::holds_alternative<ConstantRule>(a.rule()) && std::holds_alternative<ConstantRule>(b.rule())) {
        d = std::max(d, spectral_norm(std::get<ConstantRule>(a.rule()).value - std::get<ConstantRule>(b.rule()).value));
    }
    return d;
}

/// Monte Carlo mean of log+ ||A(x)|| over the invariant measure.
inline double integrability_estimate(const CocycleField& c, int count) {
    const auto pts = sample_measure(c.base(), count);
    double sum = 0.0;
    for (const auto& x : pts) sum += std::max(0.0, std::log(spectral_norm(c.value(x))));
    return sum / static_cast<double>(count);
}

}  // namespace oslab
