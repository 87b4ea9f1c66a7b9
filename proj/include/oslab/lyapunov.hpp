#pragma once

// Lyapunov spectra of cocycle fields by discrete QR (frame propagation with
// per-step re-orthonormalization), the limit operator estimate, the index-p
// Oseledets splitting, exterior-power exponents, entropy functions and the
// sub-additive sequence log ||wedge^p A^n||.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "oslab/base_dynamics.hpp"
#include "oslab/cocycle.hpp"
#include "oslab/operator_core.hpp"

namespace oslab {

struct SpectrumOptions {
    double minus_infinity_floor = std::log(1e-12);  // per-step average log below this is -inf
    double group_tolerance_min = 1e-6;
    double group_residual_factor = 5.0;
    int history_points = 100;
};

struct ExponentGroup {
    double value = 0.0;
    int multiplicity = 1;
};

struct ConvergenceSample {
    int iteration = 0;
    std::vector<double> estimates;  // per tracked direction, -inf allowed
};

struct LyapunovSpectrum {
    int dim = 0;
    std::vector<ExponentGroup> finite;  // strictly descending values
    int minus_infinity_dim = 0;
    int untracked_dim = 0;  // d - k directions not followed
    std::vector<double> raw;  // per tracked direction, descending, -inf allowed
    int iterations = 0;
    double residual = 0.0;
    double group_tolerance = 0.0;
    double tail_bound = 0.0;
    std::vector<ConvergenceSample> history;

    /// Exponents repeated by multiplicity, followed by the -inf block.
    std::vector<double> with_multiplicity() const {
        std::vector<double> out;
        for (const auto& g : finite)
            for (int i = 0; i < g.multiplicity; ++i) out.push_back(g.value);
        for (int i = 0; i < minus_infinity_dim; ++i) out.push_back(minus_infinity);
        return out;
    }

    bool all_minus_infinity() const { return finite.empty() && minus_infinity_dim > 0; }
};

namespace detail {

struct QrTrace {
    Matrix frame;
    std::vector<double> log_sums;
    std::vector<ConvergenceSample> history;
    double residual = 0.0;
};

// Start frame: the k leading right singular vectors of A(x). For diagonal
// operators this is a coordinate permutation, so constant diagonal cocycles
// are integrated without any transient.
inline Matrix leading_right_frame(const Matrix& a, int k) { return svd(a).v.leftCols(k); }

// One QR step: frame <- Q of A*frame with R diagonal made nonnegative.
// Returns the R diagonal.
inline Vector qr_step(const Matrix& a, Matrix& frame) {
    const Eigen::Index d = frame.rows(), k = frame.cols();
    Eigen::HouseholderQR<Matrix> qr(a * frame);
    Vector r = qr.matrixQR().diagonal().head(k);
    frame = qr.householderQ() * Matrix::Identity(d, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        if (r(i) < 0.0) {
            r(i) = -r(i);
            frame.col(i) *= -1.0;
        }
    }
    return r;
}

inline QrTrace qr_propagate(const CocycleField& c, BasePoint x, int n, Matrix frame, int history_points) {
    QrTrace t;
    const auto k = static_cast<std::size_t>(frame.cols());
    t.log_sums.assign(k, 0.0);
    const int window = std::max(1, n / 10);
    std::vector<double> at_window_start;
    const int every = history_points > 0 ? std::max(1, n / history_points) : 0;
    for (int j = 1; j <= n; ++j) {
        const Vector r = qr_step(c.value(x), frame);
        for (std::size_t i = 0; i < k; ++i) t.log_sums[i] += std::log(r(static_cast<Eigen::Index>(i)));
        x = step(c.base(), x);
        if (j == n - window) {
            at_window_start.resize(k);
            for (std::size_t i = 0; i < k; ++i) at_window_start[i] = t.log_sums[i] / j;
        }
        if (every > 0 && (j % every == 0 || j == n)) {
            ConvergenceSample s{j, {}};
            for (double v : t.log_sums) s.estimates.push_back(v / j);
            t.history.push_back(std::move(s));
        }
    }
    if (!at_window_start.empty()) {
        for (std::size_t i = 0; i < k; ++i) {
            const double now = t.log_sums[i] / n;
            if (std::isfinite(now) && std::isfinite(at_window_start[i]))
                t.residual = std::max(t.residual, std::abs(now - at_window_start[i]));
        }
    }
    t.frame = std::move(frame);
    return t;
}

}  // namespace detail

/// Discrete-QR estimate of the top-k Lyapunov exponents at x over n iterations.
inline LyapunovSpectrum spectrum(const CocycleField& c, const BasePoint& x, int n, int k,
                                 const SpectrumOptions& opt = {}) {
    const int d = c.dim();
    if (k < 1 || k > d) throw InvalidInput("spectrum: k must lie in [1, d]");
    if (n < 1) throw InvalidInput("spectrum: n must be >= 1");
    const auto trace = detail::qr_propagate(c, x, n, detail::leading_right_frame(c.value(x), k), opt.history_points);

    LyapunovSpectrum s;
    s.dim = d;
    s.iterations = n;
    s.untracked_dim = d - k;
    s.residual = trace.residual;
    s.tail_bound = c.tail_bound();
    s.history = trace.history;
    for (double ls : trace.log_sums) {
        const double est = ls / n;
        s.raw.push_back(est < opt.minus_infinity_floor ? minus_infinity : est);
    }
    std::sort(s.raw.begin(), s.raw.end(), std::greater<>());
    s.group_tolerance = std::max(opt.group_tolerance_min, opt.group_residual_factor * s.residual);

    std::vector<std::vector<double>> groups;
    for (double v : s.raw) {
        if (v == minus_infinity) {
            ++s.minus_infinity_dim;
            continue;
        }
        if (!groups.empty() && groups.back().back() - v <= s.group_tolerance)
            groups.back().push_back(v);
        else
            groups.push_back({v});
    }
    for (const auto& g : groups) {
        double sum = 0.0;
        for (double v : g) sum += v;
        s.finite.push_back({sum / static_cast<double>(g.size()), static_cast<int>(g.size())});
    }
    return s;
}

struct LimitOperatorEstimate {
    Vector roots;      // sigma_i(A^n(x))^{1/n}, descending
    Vector log_roots;  // (1/n) log sigma_i, -inf where sigma_i = 0
    Matrix right_frame;
    int iterations = 0;
};

/// n-th roots of the singular values of A^n(x). The product is kept as
/// Q * (e^s T) with T upper triangular and renormalized every step, so the
/// raw product is never formed.
inline LimitOperatorEstimate limit_operator_estimate(const CocycleField& c, const BasePoint& x, int n) {
    if (n < 1) throw InvalidInput("limit_operator_estimate: n must be >= 1");
    const int d = c.dim();
    Matrix frame = Matrix::Identity(d, d);
    Matrix tri = Matrix::Identity(d, d);
    double log_scale = 0.0;
    BasePoint y = x;
    for (int j = 0; j < n; ++j) {
        Eigen::HouseholderQR<Matrix> qr(c.value(y) * frame);
        const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
        frame = qr.householderQ();
        tri = r * tri;
        const double m = tri.cwiseAbs().maxCoeff();
        if (m > 0.0) {
            tri /= m;
            log_scale += std::log(m);
        }
        y = step(c.base(), y);
    }
    // T^T is column graded, which suits the one-sided structure of Jacobi SVD.
    Eigen::JacobiSVD<Matrix, Eigen::ColPivHouseholderQRPreconditioner> dec(
        tri.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    LimitOperatorEstimate out;
    out.iterations = n;
    out.roots.resize(d);
    out.log_roots.resize(d);
    for (int i = 0; i < d; ++i) {
        const double sv = dec.singularValues()(i);
        out.log_roots(i) = sv > 0.0 ? (log_scale + std::log(sv)) / n : minus_infinity;
        out.roots(i) = std::exp(out.log_roots(i));
    }
    // A^n = frame * T and T = V' S U'^T, so right singular vectors of A^n are U'.
    out.right_frame = dec.matrixU();
    return out;
}

struct OseledetsSplitting {
    int index_p = 0;
    Matrix e1;  // d x p orthonormal
    Matrix e2;  // d x (d-p) orthonormal complement
    BasePoint anchor;
    double gap = 0.0;                 // lambda_p - lambda_{p+1}, +inf if lambda_{p+1} = -inf
    double invariance_defect = 0.0;   // angle between A(x)E1(x) and E1(f(x))
};

namespace detail {

// Fast p-dimensional subspace at x: push a frame forward from f^{-n}(x).
inline Matrix pushed_forward_frame(const CocycleField& c, const BasePoint& x, int p, int n) {
    const BasePoint start = iterate(c.base(), x, -n);
    Matrix frame = leading_right_frame(c.value(start), p);
    BasePoint y = start;
    for (int j = 0; j < n; ++j) {
        qr_step(c.value(y), frame);
        y = step(c.base(), y);
    }
    return frame;
}

}  // namespace detail

/// E1 = fast p-dimensional Oseledets subspace at x (the leading frame pushed
/// forward from the past along the invertible base), E2 = its orthogonal
/// complement in the truncation.
inline OseledetsSplitting oseledets_splitting(const CocycleField& c, const BasePoint& x, int p, int n,
                                              const SpectrumOptions& opt = {}) {
    const int d = c.dim();
    if (p < 1 || p >= d) throw InvalidInput("oseledets_splitting: p must lie in [1, d-1]");
    const auto s = spectrum(c, x, n, std::min(p + 1, d), opt);
    const auto ex = s.with_multiplicity();
    const double lp = ex[static_cast<std::size_t>(p - 1)];
    const double lq = ex[static_cast<std::size_t>(p)];
    if (lp == minus_infinity) throw GapMissing(p, 0.0);
    const double gap = lq == minus_infinity ? std::numeric_limits<double>::infinity() : lp - lq;
    if (!(gap > s.group_tolerance)) throw GapMissing(p, gap);

    OseledetsSplitting out;
    out.index_p = p;
    out.anchor = x;
    out.gap = gap;
    out.e1 = detail::pushed_forward_frame(c, x, p, n);
    out.e2 = orthogonal_complement(out.e1);
    const Matrix image = c.value(x) * out.e1;
    const Matrix next = detail::pushed_forward_frame(c, step(c.base(), x), p, n);
    try {
        out.invariance_defect = subspace_distance(image, next);
    } catch (const InvalidInput&) {
        out.invariance_defect = std::numbers::pi / 2;  // A(x) collapses E1
    }
    return out;
}

/// Top exponent of the compound cocycle wedge^p A. A second frame direction
/// is carried along so that an exact collapse of the leading one does not
/// hide the surviving growth.
inline double exterior_top_exponent(const CocycleField& c, const BasePoint& x, int p, int n,
                                    const SpectrumOptions& opt = {}, std::size_t cap = default_compound_cap) {
    const CocycleField w = c.exterior(p, cap);
    const auto s = spectrum(w, x, n, std::min(w.dim(), 2), opt);
    return s.raw.front();
}

/// LE_p at x: sum of the top-p exponents with multiplicity, -inf if any is -inf.
/// Uses the full frame, so rank collapse of one direction cannot mask another.
inline double entropy(const CocycleField& c, int p, const BasePoint& x, int n, const SpectrumOptions& opt = {}) {
    if (p < 1 || p > c.dim()) throw InvalidInput("entropy: p out of range");
    const auto s = spectrum(c, x, n, c.dim(), opt);
    double sum = 0.0;
    for (int i = 0; i < p; ++i) {
        const double v = s.raw[static_cast<std::size_t>(i)];
        if (v == minus_infinity) return minus_infinity;
        sum += v;
    }
    return sum;
}

struct SubadditiveSequence {
    std::vector<double> a;            // a[n-1] = log max_x ||wedge^p A^n(x)||
    std::vector<double> running_inf;  // min_{j<=n} a_j / j
};

/// log ||wedge^p A^n|| as a sup over `sample`; for periodic bases the whole
/// orbit is used so the sup is exact. The compound cocycle is multiplied out
/// directly, so only its top singular value is needed.
inline SubadditiveSequence subadditive_sequence(const CocycleField& c, int p, int n_max,
                                                std::vector<BasePoint> sample,
                                                std::size_t cap = default_compound_cap) {
    if (n_max < 2) throw InvalidInput("subadditive_sequence: n_max must be >= 2");
    if (p < 1 || p > c.dim()) throw InvalidInput("subadditive_sequence: p out of range");
    const BaseSystem& base = c.base();
    if (base.is_periodic()) {
        sample.clear();
        for (int i = 0; i < base.period(); ++i) sample.push_back(periodic_point(base, i));
    }
    if (sample.empty()) throw InvalidInput("subadditive_sequence: empty sample");
    const CocycleField w = c.exterior(p, cap);
    SubadditiveSequence out;
    out.a.assign(static_cast<std::size_t>(n_max), minus_infinity);
    const int d = w.dim();
    for (const auto& x : sample) {
        // wedge^p A^n = Q T with T rescaled every step.
        Matrix frame = Matrix::Identity(d, d), tri = Matrix::Identity(d, d);
        double log_scale = 0.0;
        BasePoint y = x;
        for (int n = 1; n <= n_max; ++n) {
            Eigen::HouseholderQR<Matrix> qr(w.value(y) * frame);
            frame = qr.householderQ();
            tri = Matrix(qr.matrixQR().triangularView<Eigen::Upper>()) * tri;
            y = step(base, y);
            const double mx = tri.cwiseAbs().maxCoeff();
            if (mx == 0.0) break;  // the product stays zero
            tri /= mx;
            log_scale += std::log(mx);
            auto& slot = out.a[static_cast<std::size_t>(n - 1)];
            slot = std::max(slot, log_scale + std::log(spectral_norm(tri)));
        }
    }
    double inf = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= n_max; ++n) {
        inf = std::min(inf, out.a[static_cast<std::size_t>(n - 1)] / n);
        out.running_inf.push_back(inf);
    }
    return out;
}

}  // namespace oslab
