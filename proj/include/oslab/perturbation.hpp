#pragma once

// Perturbations of cocycle fields that destroy exterior-power growth where
// domination fails: single-site rotations, direction kills, concatenated
// small rotations that carry E1 into the image of E2, the global
// entropy-drop perturbation, and the dominated/trivial dichotomy probe.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oslab/base_dynamics.hpp"
#include "oslab/cocycle.hpp"
#include "oslab/domination.hpp"
#include "oslab/lyapunov.hpp"
#include "oslab/operator_core.hpp"

namespace oslab {

/// Largest xi with ||A|| * ||I - R_xi|| = ||A|| * 2 sin(xi/2) <= eps.
inline double max_rotation_angle(double norm_a, double eps) {
    if (norm_a <= 0.0) return std::numbers::pi;
    return 2.0 * std::asin(std::min(1.0, eps / (2.0 * norm_a)));
}

struct RotationResult {
    CocycleField field;
    double distance = 0.0;  // ||A(x) - B(x)|| measured
    double bound = 0.0;     // ||A(x)|| * 2 sin(xi/2)
    double xi_max = 0.0;
};

/// B(x) = A(x) R_xi with R_xi the rotation by xi in span(plane) carrying its
/// first basis vector toward the second; B = A away from x.
inline RotationResult rotate_at_point(const CocycleField& c, const BasePoint& x, const Matrix& plane, double xi,
                                      double eps) {
    if (plane.rows() != c.dim() || plane.cols() != 2) throw InvalidInput("rotate_at_point: plane must be d x 2");
    if (!(eps > 0.0)) throw InvalidInput("rotate_at_point: eps must be > 0");
    const Matrix q = orthonormalize(plane, "rotation plane");
    const Matrix a = c.value(x);
    const double na = spectral_norm(a);
    RotationResult out{c, 0.0, 0.0, max_rotation_angle(na, eps)};
    if (na == 0.0) return out;
    const double bound = na * 2.0 * std::sin(std::abs(xi) / 2.0);
    if (bound > eps * (1.0 + 1e-12)) throw AngleTooLarge(out.xi_max);
    // Keep the orientation of the caller's first vector.
    Vector e = q.col(0), f = q.col(1);
    if (e.dot(plane.col(0)) < 0.0) e = -e;
    if (f.dot(plane.col(1)) < 0.0) f = -f;
    Matrix b = a * rotation_in_plane(e, f, xi);
    out.distance = spectral_norm(a - b);
    out.bound = bound;
    out.field = c.with_patch(x, std::move(b), "rotate");
    return out;
}

inline RotationResult rotate_at_point(const CocycleField& c, const BasePoint& x, const PlaneRotation& plane,
                                      double eps) {
    Matrix basis = Matrix::Zero(c.dim(), 2);
    if (plane.i == plane.j || plane.i < 0 || plane.j < 0 || plane.i >= c.dim() || plane.j >= c.dim())
        throw InvalidInput("rotate_at_point: plane indices must be distinct and < d");
    basis(plane.i, 0) = 1.0;
    basis(plane.j, 1) = 1.0;
    return rotate_at_point(c, x, basis, plane.angle, eps);
}

struct KillReport {
    int site = 0;  // N: the patch sits at f^N(x)
    BasePoint site_point;
    Vector v;
    double norm_av = 0.0;
    double distance = 0.0;
    int rank = 0;            // rank of B^{n_target}(x), exact pivot count
    double wedge_norm = 0.0;  // ||wedge^p B^{n_target}(x)||
};

struct KillResult {
    CocycleField field;
    KillReport report;
};

/// Zeroes A(f^N x) on the first direction v of the transported E1 with
/// ||A(f^N x) v|| < eps, N < n_target.
inline KillResult kill_direction(const CocycleField& c, const BasePoint& x, const OseledetsSplitting& split,
                                 int n_target, double eps) {
    if (n_target < 1) throw InvalidInput("kill_direction: n_target must be >= 1");
    if (!(split.anchor == x)) throw InvalidInput("kill_direction: splitting is not anchored at x");
    Matrix e1 = split.e1;
    BasePoint y = x;
    for (int n = 0; n < n_target; ++n) {
        const Matrix a = c.value(y);
        const SvdResult s = svd(a * e1);
        const double smin = s.sigma(s.sigma.size() - 1);
        if (smin < eps) {
            Vector v = e1 * s.v.col(s.v.cols() - 1);
            v.normalize();
            Matrix b = a - (a * v) * v.transpose();
            // Coordinate directions give an exactly zero column.
            for (Eigen::Index i = 0; i < v.size(); ++i)
                if (std::abs(std::abs(v(i)) - 1.0) <= 4 * std::numeric_limits<double>::epsilon()) {
                    v = Vector::Unit(v.size(), i) * (v(i) > 0 ? 1.0 : -1.0);
                    b = a;
                    b.col(i).setZero();
                }
            KillResult out{c.with_patch(y, b, "kill"), {}};
            out.report.site = n;
            out.report.site_point = y;
            out.report.v = v;
            out.report.norm_av = (a * v).norm();
            out.report.distance = spectral_norm(a - b);
            const Matrix prod = random_product(out.field, x, n_target);
            out.report.rank = exact_rank(prod);
            out.report.wedge_norm = spectral_norm(compound_matrix(prod, split.index_p));
            return out;
        }
        e1 = orthonormalize(a * e1, "transported E1");
        y = step(c.base(), y);
    }
    throw NbNotPresent("kill_direction: no orbit point within " + std::to_string(n_target) +
                       " steps where A|E1 has a direction of norm < eps");
}

/// Index-p form: E1 is the fast p-dimensional subspace at x, or the whole
/// space when p = d.
inline KillResult kill_direction(const CocycleField& c, const BasePoint& x, int p, int n_target, double eps,
                                 int n_spectrum = 2000, const SpectrumOptions& opt = {}) {
    const int d = c.dim();
    if (p < 1 || p > d) throw InvalidInput("kill_direction: p must lie in [1, d]");
    if (p < d) return kill_direction(c, x, oseledets_splitting(c, x, p, n_spectrum, opt), n_target, eps);
    OseledetsSplitting whole;
    whole.index_p = d;
    whole.e1 = Matrix::Identity(d, d);
    whole.e2 = Matrix(d, 0);
    whole.anchor = x;
    whole.gap = std::numeric_limits<double>::infinity();
    return kill_direction(c, x, whole, n_target, eps);
}

/// ||A^m|E2|| * ||(A^m|E1)^{-1}||: the largest growth on E2 over the smallest on E1.
inline double mixing_ratio(const CocycleField& c, const BasePoint& x, const OseledetsSplitting& split, int m) {
    const Matrix p = detail::scaled_product(c, x, m);
    const double fast = singular_values(p * split.e1).minCoeff();
    const double slow = split.e2.cols() ? singular_values(p * split.e2).maxCoeff() : 0.0;
    return fast > 0.0 ? slow / fast : std::numeric_limits<double>::infinity();
}

struct MixReport {
    int m = 0;
    double hypothesis_ratio = 0.0;
    std::vector<double> step_angles;
    double max_step_distance = 0.0;
    Vector v;  // unit vector of E1(x)
    Vector w;  // L_{m-1}...L_0 v
    double residual_angle = 0.0;  // between w and A^m(x) u, u in E2(x)
};

struct MixResult {
    CocycleField field;
    MixReport report;
};

namespace detail {

inline double line_angle(const Vector& a, const Vector& b) {
    const double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
    const Vector perp = b / b.norm() - (a / a.norm()) * (a.dot(b) / (a.norm() * b.norm()));
    return std::atan2(perp.norm(), c);
}

struct Schedule {
    bool feasible = false;
    std::vector<Matrix> ops;
    std::vector<double> angles;
    double max_distance = 0.0;
    Vector w;
    Vector target;
};

// Rotate the carried vector toward the carried target line in equal shares
// of the remaining angle, each share within the per-site budget.
inline Schedule plan_schedule(const CocycleField& c, const BasePoint& x, const Vector& v, const Vector& u, int m,
                              double delta) {
    Schedule s;
    Vector z = v.normalized(), t = u.normalized();
    BasePoint y = x;
    for (int j = 0; j < m; ++j) {
        const Matrix a = c.value(y);
        if (z.dot(t) < 0.0) t = -t;
        const double alpha = line_angle(z, t);
        const double phi = alpha / static_cast<double>(m - j);
        const double na = spectral_norm(a);
        if (phi > max_rotation_angle(na, delta) * (1.0 - 1e-9)) return s;
        Matrix l = a;
        if (phi > 0.0) {
            Vector f = t - z * z.dot(t);
            if (f.norm() > 0.0) {
                f.normalize();
                l = a * rotation_in_plane(z, f, phi);
            }
        }
        s.ops.push_back(l);
        s.angles.push_back(phi);
        s.max_distance = std::max(s.max_distance, spectral_norm(l - a));
        z = l * z;
        t = a * t;
        if (z.norm() == 0.0 || t.norm() == 0.0) return s;
        z.normalize();
        t.normalize();
        y = step(c.base(), y);
    }
    s.feasible = true;
    s.w = z;
    s.target = t;
    return s;
}

}  // namespace detail

/// Builds L_j = A(f^j x) R_j, j < m, each within delta of A(f^j x), whose
/// concatenation carries a unit v in E1(x) onto the line A^m(x) u, u in E2(x).
inline MixResult mix_directions(const CocycleField& c, const BasePoint& x, const OseledetsSplitting& split, int m,
                                double delta, int m_search_cap = 4096) {
    if (m < 1) throw InvalidInput("mix_directions: m must be >= 1");
    if (!(delta > 0.0)) throw InvalidInput("mix_directions: delta must be > 0");
    if (!(split.anchor == x)) throw InvalidInput("mix_directions: splitting is not anchored at x");
    if (split.e2.cols() == 0) throw InvalidInput("mix_directions: E2 is trivial");
    const auto sites = orbit(c.base(), x, m - 1);
    for (std::size_t i = 0; i < sites.size(); ++i)
        for (std::size_t j = i + 1; j < sites.size(); ++j)
            if (sites[i] == sites[j])
                throw InvalidInput("mix_directions: the orbit revisits a site within m steps");

    const Matrix p = detail::scaled_product(c, x, m);
    const SvdResult fast = svd(p * split.e1);
    const SvdResult slow = svd(p * split.e2);
    const double den = fast.sigma(fast.sigma.size() - 1);
    const double ratio = den > 0.0 ? slow.sigma(0) / den : std::numeric_limits<double>::infinity();
    if (ratio < 0.5) throw HypothesisFailed(ratio);
    const Vector v = split.e1 * fast.v.col(fast.v.cols() - 1);
    const Vector u = split.e2 * slow.v.col(0);

    auto sched = detail::plan_schedule(c, x, v, u, m, delta);
    if (!sched.feasible) {
        int minimal = 0;
        for (int mm = m + 1; mm <= m_search_cap; ++mm) {
            if (detail::plan_schedule(c, x, v, u, mm, delta).feasible) {
                minimal = mm;
                break;
            }
        }
        throw NeedsLargerM(minimal);
    }
    MixResult out{c, {}};
    BasePoint y = x;
    for (int j = 0; j < m; ++j) {
        if (sched.angles[static_cast<std::size_t>(j)] > 0.0)
            out.field = out.field.with_patch(y, sched.ops[static_cast<std::size_t>(j)], "mix");
        y = step(c.base(), y);
    }
    out.report.m = m;
    out.report.hypothesis_ratio = ratio;
    out.report.step_angles = sched.angles;
    out.report.max_step_distance = sched.max_distance;
    out.report.v = v;
    out.report.w = random_product(out.field, x, m) * v;
    out.report.residual_angle = detail::line_angle(out.report.w, random_product(c, x, m) * u);
    return out;
}

/// Right-hand side of the entropy-drop inequality for wedge^p of the perturbed cocycle.
inline double entropy_drop_bound(const std::vector<double>& exponents, int p, double eps) {
    if (static_cast<int>(exponents.size()) < p + 1) throw InvalidInput("entropy_drop_bound: need p+1 exponents");
    const double next = exponents[static_cast<std::size_t>(p)];
    if (next == minus_infinity) return -eps;
    double sum = 0.0;
    for (int i = 0; i + 1 < p; ++i) sum += exponents[static_cast<std::size_t>(i)];
    return sum + 0.5 * (exponents[static_cast<std::size_t>(p - 1)] + next) + eps;
}

struct PerturbationConfig {
    int sample_count = 8;
    int n_spectrum = 2000;
    int horizon = 1000;
    int kill_target = 64;
    std::optional<double> xi;  // rotation angle for the collapsed periodic schedule
    SpectrumOptions spectrum;
    DominationOptions domination;
};

enum class PerturbationKind { none, kill, mix, rotate };

inline const char* to_string(PerturbationKind k) {
    switch (k) {
        case PerturbationKind::none: return "none";
        case PerturbationKind::kill: return "kill";
        case PerturbationKind::mix: return "mix";
        case PerturbationKind::rotate: return "rotate";
    }
    return "?";
}

struct PointPerturbation {
    int point_index = 0;
    BasePoint point;
    PointClass classification = PointClass::no_gap;
    PerturbationKind kind = PerturbationKind::none;
    std::string detail;  // failure reason when no patch could be built
    int patches = 0;
};

struct GlobalPerturbationReport {
    explicit GlobalPerturbationReport(CocycleField f) : field(std::move(f)) {}
    CocycleField field;
    bool applied = false;
    std::string status;  // "perturbed" or "nothing_to_perturb"
    std::vector<PointPerturbation> points;
    std::vector<double> exponents_before;  // top p+1 at the reference point
    double distance = 0.0;
    double delta = 0.0;
    double le_before = 0.0;  // LE_p(A) at the reference point
    double le_after = 0.0;   // lambda_1^{wedge p}(B) at the reference point
    double bound = 0.0;
    bool bound_met = false;
};

namespace detail {

inline int count_new_patches(const CocycleField& before, const CocycleField& after) {
    return static_cast<int>(after.patches().size() - before.patches().size());
}

// Rotations by xi at every site of a periodic orbit, in the plane of the
// transported E1 direction and its E2 companion.
inline CocycleField collapsed_rotation(const CocycleField& c, const OseledetsSplitting& split, const Vector& v0,
                                       const Vector& u0, double delta, std::optional<double> xi) {
    const BaseSystem& base = c.base();
    CocycleField out = c;
    Vector v = v0, u = u0;
    Matrix e1 = split.e1;
    BasePoint y = split.anchor;
    for (int j = 0; j < base.period(); ++j) {
        const Matrix a = c.value(y);
        const double na = spectral_norm(a);
        const double xmax = max_rotation_angle(na, delta);
        const double angle = xi ? *xi : 0.5 * xmax;
        const Matrix e2 = orthogonal_complement(e1);
        Vector uu = e2 * (e2.transpose() * u);
        if (uu.norm() < 1e-12) uu = e2.col(0);
        Matrix plane(c.dim(), 2);
        plane.col(0) = v.normalized();
        plane.col(1) = uu.normalized();
        out = rotate_at_point(out, y, plane, angle, delta).field;
        const Vector av = a * v, au = a * u;
        if (av.norm() == 0.0) break;
        v = av.normalized();
        u = au.norm() > 0.0 ? Vector(au.normalized()) : Vector(e2.col(0));
        e1 = orthonormalize(a * e1, "transported E1");
        y = step(base, y);
    }
    return out;
}

}  // namespace detail

/// Perturbs A at one point x whose index-p splitting fails m-domination.
/// Returns the new field and what was done; the field is unchanged when x is
/// in Lambda_p(A, m) or has no gap.
inline std::pair<CocycleField, PointPerturbation> perturb_point(const CocycleField& c, const BasePoint& x, int p,
                                                                int m, double delta,
                                                                const PerturbationConfig& cfg = {}) {
    PointPerturbation rec;
    rec.point = x;
    const BaseSystem& base = c.base();
    const int horizon = effective_horizon(base, cfg.horizon);
    OseledetsSplitting split;
    try {
        split = oseledets_splitting(c, x, p, cfg.n_spectrum, cfg.spectrum);
    } catch (const GapMissing& g) {
        rec.classification = PointClass::no_gap;
        rec.detail = g.what();
        return {c, rec};
    }
    const auto cert = check_ell_domination(c, x, split, m, horizon, cfg.domination);
    if (cert.verdict == Verdict::dominated) {
        rec.classification = base.is_periodic() ? PointClass::periodic_case : PointClass::in_Lambda;
        return {c, rec};
    }
    rec.classification = cert.verdict == Verdict::failed_NB ? PointClass::in_Gamma_NB : PointClass::in_Gamma_ND;

    if (cert.verdict == Verdict::failed_NB) {
        try {
            auto k = kill_direction(c, x, split, std::max(cfg.kill_target, cert.witness->orbit_index + 1), delta);
            rec.kind = PerturbationKind::kill;
            rec.patches = detail::count_new_patches(c, k.field);
            return {k.field, rec};
        } catch (const NbNotPresent& e) {
            rec.detail = e.what();
            return {c, rec};
        }
    }

    if (base.is_periodic()) {
        // The orbit revisits its sites, so the mixing schedule collapses onto one
        // rotation per site.
        const auto& w = *cert.witness;
        Matrix e1 = split.e1;
        BasePoint y = x;
        for (int j = 0; j < w.orbit_index; ++j) {
            e1 = orthonormalize(c.value(y) * e1, "transported E1");
            y = step(base, y);
        }
        OseledetsSplitting local = split;
        local.anchor = y;
        local.e1 = e1;
        local.e2 = orthogonal_complement(e1);
        try {
            auto f = detail::collapsed_rotation(c, local, w.v, w.u, delta, cfg.xi);
            rec.kind = PerturbationKind::rotate;
            rec.patches = detail::count_new_patches(c, f);
            return {f, rec};
        } catch (const AngleTooLarge& e) {
            rec.detail = e.what();
            return {c, rec};
        }
    }

    // Search the orbit for a site where the mixing hypothesis holds, starting
    // half way along the checked segment.
    BasePoint start = x;
    std::vector<int> order;
    for (int s = horizon / 2; s < horizon; ++s) order.push_back(s);
    for (int s = 0; s < horizon / 2; ++s) order.push_back(s);
    std::string last_failure = "no site satisfies the mixing hypothesis";
    for (int s : order) {
        const BasePoint y = iterate(base, start, s);
        try {
            const auto sy = oseledets_splitting(c, y, p, cfg.n_spectrum, cfg.spectrum);
            int mm = m;
            for (int attempt = 0; attempt < 2; ++attempt) {
                try {
                    auto mix = mix_directions(c, y, sy, mm, delta);
                    rec.kind = PerturbationKind::mix;
                    rec.patches = detail::count_new_patches(c, mix.field);
                    return {mix.field, rec};
                } catch (const NeedsLargerM& e) {
                    last_failure = e.what();
                    if (e.minimal_m() <= 0) break;
                    mm = e.minimal_m();
                }
            }
        } catch (const HypothesisFailed& e) {
            last_failure = e.what();
        } catch (const GapMissing& e) {
            last_failure = e.what();
        } catch (const InvalidInput& e) {
            last_failure = e.what();
        }
    }
    rec.detail = last_failure;
    return {c, rec};
}

/// Applies perturb_point at every sampled point (the whole orbit for periodic
/// bases), then compares LE_p(A) with lambda_1^{wedge p}(B) at the first point.
inline GlobalPerturbationReport global_perturbation(const CocycleField& c, int p, int m, double delta, double eps,
                                                    const PerturbationConfig& cfg = {}) {
    if (p < 1 || p >= c.dim()) throw InvalidInput("global_perturbation: p must lie in [1, d-1]");
    if (!(delta > 0.0)) throw InvalidInput("global_perturbation: delta must be > 0");
    const BaseSystem& base = c.base();
    std::vector<BasePoint> pts;
    if (base.is_periodic())
        pts.push_back(periodic_point(base, 0));
    else
        pts = sample_measure(base, cfg.sample_count);

    GlobalPerturbationReport rep(c);
    rep.delta = delta;
    CocycleField b = c;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        auto [next, rec] = perturb_point(b, pts[i], p, m, delta, cfg);
        rec.point_index = static_cast<int>(i);
        b = std::move(next);
        rep.points.push_back(std::move(rec));
    }
    rep.field = b;
    rep.applied = b.patches().size() > c.patches().size();
    rep.status = rep.applied ? "perturbed" : "nothing_to_perturb";

    const BasePoint& ref = pts.front();
    const auto sa = spectrum(c, ref, cfg.n_spectrum, c.dim(), cfg.spectrum);
    rep.exponents_before.assign(sa.raw.begin(), sa.raw.begin() + p + 1);
    rep.le_before = entropy(c, p, ref, cfg.n_spectrum, cfg.spectrum);
    rep.le_after = rep.applied ? exterior_top_exponent(b, ref, p, cfg.n_spectrum, cfg.spectrum) : rep.le_before;
    rep.bound = entropy_drop_bound(rep.exponents_before, p, eps);
    rep.bound_met = rep.le_after < rep.bound;
    rep.distance = cocycle_distance(c, b, pts);
    return rep;
}

enum class ProbeBranch { null_spectrum, dominated, perturbed, no_gap };

inline const char* to_string(ProbeBranch b) {
    switch (b) {
        case ProbeBranch::null_spectrum: return "NULL";
        case ProbeBranch::dominated: return "dominated";
        case ProbeBranch::perturbed: return "perturbed";
        case ProbeBranch::no_gap: return "no_gap";
    }
    return "?";
}

struct ProbeConfig {
    int sample_count = 4;
    int p = 0;  // 0: index of the largest gap
    int m = 0;  // 0: on periodic bases use the N from the gap formula
    double delta = 0.1;
    double epsilon = 1e-3;
    double drop_margin = 1e-3;
    PerturbationConfig perturbation;
};

struct ProbeRecord {
    int point_index = 0;
    std::string point;
    ProbeBranch branch = ProbeBranch::no_gap;
    std::vector<double> exponents;  // raw, descending
    int p = 0;
    int m = 0;
    std::optional<int> gap_formula_n;          // periodic bases only
    std::optional<bool> gap_formula_certified;  // m = N domination on the orbit
    std::optional<DominationCertificate> certificate;
    PointClass classification = PointClass::no_gap;
    PerturbationKind perturbation = PerturbationKind::none;
    double delta = 0.0;
    double distance = 0.0;
    double le_before = 0.0;
    double le_after = 0.0;
    double bound = 0.0;
    bool bound_met = false;
    bool drop_met = false;
    std::string detail;
};

struct ProbeReport {
    std::vector<ProbeRecord> records;
};

/// Smallest N >= 1 with exp(N (lambda_{p+1} - lambda_p)) < 1/2, or, when
/// lambda_{p+1} = -inf, with exp(N (-lambda_p - eps')) < 1/2 where
/// eps' > -lambda_p.
inline int gap_formula_n(double lambda_p, double lambda_next, double eps) {
    double rate;
    if (lambda_next == minus_infinity) {
        const double e = lambda_p > -eps ? eps : eps - lambda_p;
        rate = lambda_p + e;
    } else {
        rate = lambda_p - lambda_next;
    }
    if (!(rate > 0.0)) throw InvalidInput("gap_formula_n: no gap");
    int n = static_cast<int>(std::floor(std::log(2.0) / rate)) + 1;
    while (n > 1 && std::exp((n - 1) * -rate) < 0.5) --n;
    while (!(std::exp(n * -rate) < 0.5)) ++n;
    return n;
}

namespace detail {

inline int largest_gap_index(const std::vector<double>& ex, double tol) {
    int best = 0;
    double best_gap = tol;
    for (std::size_t i = 0; i + 1 < ex.size(); ++i) {
        if (ex[i] == minus_infinity) break;
        const double g = ex[i + 1] == minus_infinity ? std::numeric_limits<double>::infinity() : ex[i] - ex[i + 1];
        if (g > best_gap) {
            best_gap = g;
            best = static_cast<int>(i) + 1;
        }
    }
    return best;
}

}  // namespace detail

/// For each sampled point: NULL when every exponent is -inf; otherwise the
/// largest-gap index p is certified for m-domination, and points in Gamma_p
/// are perturbed and the resulting LE_p drop measured against delta.
inline ProbeReport dichotomy_probe(const CocycleField& c, const ProbeConfig& cfg) {
    const BaseSystem& base = c.base();
    const PerturbationConfig& pc = cfg.perturbation;
    std::vector<BasePoint> pts;
    if (base.is_periodic()) {
        for (int i = 0; i < std::min(base.period(), cfg.sample_count); ++i) pts.push_back(periodic_point(base, i));
    } else {
        pts = sample_measure(base, cfg.sample_count);
    }
    ProbeReport out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const BasePoint& x = pts[i];
        ProbeRecord r;
        r.point_index = static_cast<int>(i);
        r.point = x.describe();
        r.delta = cfg.delta;
        const auto s = spectrum(c, x, pc.n_spectrum, c.dim(), pc.spectrum);
        r.exponents = s.raw;
        if (s.all_minus_infinity()) {
            r.branch = ProbeBranch::null_spectrum;
            out.records.push_back(std::move(r));
            continue;
        }
        r.p = cfg.p > 0 ? cfg.p : detail::largest_gap_index(s.raw, s.group_tolerance);
        if (r.p == 0 || r.p >= c.dim()) {
            r.branch = ProbeBranch::no_gap;
            r.detail = "no spectral gap";
            out.records.push_back(std::move(r));
            continue;
        }
        OseledetsSplitting split;
        try {
            split = oseledets_splitting(c, x, r.p, pc.n_spectrum, pc.spectrum);
        } catch (const GapMissing& g) {
            r.branch = ProbeBranch::no_gap;
            r.detail = g.what();
            out.records.push_back(std::move(r));
            continue;
        }
        const int horizon = effective_horizon(base, pc.horizon);
        r.m = cfg.m;
        if (base.is_periodic()) {
            const auto ex = s.with_multiplicity();
            const int n = gap_formula_n(ex[static_cast<std::size_t>(r.p - 1)], ex[static_cast<std::size_t>(r.p)],
                                        cfg.epsilon);
            r.gap_formula_n = n;
            r.gap_formula_certified =
                check_ell_domination(c, x, split, n, horizon, pc.domination).verdict == Verdict::dominated;
            if (r.m <= 0) r.m = n;
        }
        if (r.m <= 0) r.m = 1;
        r.certificate = check_ell_domination(c, x, split, r.m, horizon, pc.domination);
        if (r.certificate->verdict == Verdict::dominated) {
            r.branch = ProbeBranch::dominated;
            r.classification = base.is_periodic() ? PointClass::periodic_case : PointClass::in_Lambda;
            out.records.push_back(std::move(r));
            continue;
        }
        auto [b, rec] = perturb_point(c, x, r.p, r.m, cfg.delta, pc);
        r.branch = ProbeBranch::perturbed;
        r.classification = rec.classification;
        r.perturbation = rec.kind;
        r.detail = rec.detail;
        r.distance = cocycle_distance(c, b, {x});
        r.le_before = entropy(c, r.p, x, pc.n_spectrum, pc.spectrum);
        r.le_after = entropy(b, r.p, x, pc.n_spectrum, pc.spectrum);
        r.bound = entropy_drop_bound(s.with_multiplicity(), r.p, cfg.epsilon);
        r.bound_met = r.le_after < r.bound;
        r.drop_met = (r.le_after == minus_infinity && r.le_before != minus_infinity) ||
                     (r.le_before - r.le_after >= cfg.drop_margin);
        out.records.push_back(std::move(r));
    }
    return out;
}

}  // namespace oslab
