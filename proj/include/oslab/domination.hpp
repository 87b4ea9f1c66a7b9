#pragma once

// l-domination certificates for index-p splittings along orbit segments,
// Lambda_p / Gamma_p point classification, and angle profiles.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "oslab/cocycle.hpp"
#include "oslab/lyapunov.hpp"
#include "oslab/operator_core.hpp"

namespace oslab {

enum class Verdict { dominated, failed_NB, failed_ND, no_gap };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::dominated: return "dominated";
        case Verdict::failed_NB: return "failed_NB";
        case Verdict::failed_ND: return "failed_ND";
        case Verdict::no_gap: return "no_gap";
    }
    return "?";
}

struct DominationWitness {
    int orbit_index = 0;
    Vector u;  // unit vector in E2 (empty for NB)
    Vector v;  // unit vector in E1
    double value = 0.0;  // ratio for ND, ||A v|| for NB
};

struct DominationCertificate {
    int index_p = 0;
    int ell = 1;
    double theta = 0.0;  // observed min over the horizon of sigma_min(A|E1)
    double gamma = 0.0;  // min principal angle between E1 and E2 over the horizon
    double max_ratio = 0.0;
    Verdict verdict = Verdict::no_gap;
    std::optional<DominationWitness> witness;
    int horizon = 0;
    double implied_ell_step_bound() const { return std::pow(theta, ell); }
};

struct DominationOptions {
    double theta_floor = 1e-9;
    double ratio_threshold = 0.5;
    int horizon_default = 1000;
};

/// Horizon actually checked: the whole orbit on periodic bases.
inline int effective_horizon(const BaseSystem& s, int horizon) { return s.is_periodic() ? s.period() : horizon; }

/// Candidate splitting from a declared E1 basis (no spectral gap required).
inline OseledetsSplitting declared_splitting(const BasePoint& x, const Matrix& e1_basis) {
    if (e1_basis.cols() < 1 || e1_basis.cols() >= e1_basis.rows())
        throw InvalidInput("declared_splitting: E1 must have between 1 and d-1 columns");
    OseledetsSplitting out;
    out.index_p = static_cast<int>(e1_basis.cols());
    out.e1 = orthonormalize(e1_basis, "declared E1");
    out.e2 = orthogonal_complement(out.e1);
    out.anchor = x;
    out.gap = std::numeric_limits<double>::quiet_NaN();
    return out;
}

namespace detail {

// A^l(y), rescaled to unit max entry (ratios are scale free).
inline Matrix scaled_product(const CocycleField& c, BasePoint y, int ell) {
    Matrix p = Matrix::Identity(c.dim(), c.dim());
    for (int j = 0; j < ell; ++j) {
        p = c.value(y) * p;
        const double m = p.cwiseAbs().maxCoeff();
        if (m > 0.0) p /= m;
        y = step(c.base(), y);
    }
    return p;
}

}  // namespace detail

/// Checks ||A(y)v|| >= theta_floor and ||A^l u|| / ||A^l v|| <= 1/2 for unit
/// u in E2, v in E1, at `horizon` orbit points starting at the splitting's
/// anchor. E1 is transported by A, E2 is its orthogonal complement.
inline DominationCertificate check_ell_domination(const CocycleField& c, const BasePoint& x,
                                                  const OseledetsSplitting& split, int ell, int horizon,
                                                  const DominationOptions& opt = {}) {
    if (ell < 1) throw InvalidInput("check_ell_domination: ell must be >= 1");
    if (horizon < 1) throw InvalidInput("check_ell_domination: horizon must be >= 1");
    if (!(split.anchor == x)) throw InvalidInput("check_ell_domination: splitting is not anchored at x");
    DominationCertificate cert;
    cert.index_p = split.index_p;
    cert.ell = ell;
    cert.horizon = horizon;
    cert.theta = std::numeric_limits<double>::infinity();
    cert.gamma = std::numbers::pi / 2;
    Matrix e1 = split.e1;
    BasePoint y = x;
    for (int i = 0; i < horizon; ++i) {
        const Matrix e2 = orthogonal_complement(e1);
        if (e2.cols() > 0) cert.gamma = std::min(cert.gamma, subspace_angle(e1, e2));
        const Matrix a = c.value(y);

        const SvdResult one = svd(a * e1);
        const double smin = one.sigma(one.sigma.size() - 1);
        cert.theta = std::min(cert.theta, smin);
        if (smin < opt.theta_floor) {
            cert.verdict = Verdict::failed_NB;
            cert.witness = DominationWitness{i, Vector(), e1 * one.v.col(one.v.cols() - 1), smin};
            return cert;
        }

        if (e2.cols() > 0) {
            const Matrix p = detail::scaled_product(c, y, ell);
            const SvdResult fast = svd(p * e1);
            const SvdResult slow = svd(p * e2);
            const double den = fast.sigma(fast.sigma.size() - 1);
            const double num = slow.sigma(0);
            const double ratio = den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
            cert.max_ratio = std::max(cert.max_ratio, ratio);
            if (ratio > opt.ratio_threshold) {
                cert.verdict = Verdict::failed_ND;
                cert.witness = DominationWitness{i, e2 * slow.v.col(0), e1 * fast.v.col(fast.v.cols() - 1), ratio};
                return cert;
            }
        }
        e1 = orthonormalize(a * e1, "transported E1");
        y = step(c.base(), y);
    }
    cert.verdict = Verdict::dominated;
    return cert;
}

struct MinEllResult {
    std::optional<int> ell;
    DominationCertificate certificate;
};

/// Smallest l <= ell_max with a dominated certificate; every l is checked on its own.
inline MinEllResult find_min_ell(const CocycleField& c, const BasePoint& x, const OseledetsSplitting& split,
                                 int ell_max, int horizon, const DominationOptions& opt = {}) {
    if (ell_max < 1) throw InvalidInput("find_min_ell: ell_max must be >= 1");
    MinEllResult out;
    for (int ell = 1; ell <= ell_max; ++ell) {
        out.certificate = check_ell_domination(c, x, split, ell, horizon, opt);
        if (out.certificate.verdict == Verdict::dominated) {
            out.ell = ell;
            return out;
        }
    }
    return out;
}

enum class PointClass { in_Lambda, in_Gamma_NB, in_Gamma_ND, no_gap, periodic_case };

inline const char* to_string(PointClass k) {
    switch (k) {
        case PointClass::in_Lambda: return "in_Lambda";
        case PointClass::in_Gamma_NB: return "in_Gamma_NB";
        case PointClass::in_Gamma_ND: return "in_Gamma_ND";
        case PointClass::no_gap: return "no_gap";
        case PointClass::periodic_case: return "periodic_case";
    }
    return "?";
}

struct Classification {
    PointClass kind = PointClass::no_gap;
    LyapunovSpectrum spectrum;
    double gap = 0.0;
    std::optional<OseledetsSplitting> splitting;
    std::optional<DominationCertificate> certificate;
};

/// Lambda_p(A, m) membership of x, with the failure mode when x is in Gamma_p.
/// A missing gap takes precedence; periodic bases are handed to the periodic logic.
inline Classification classify_point(const CocycleField& c, const BasePoint& x, int p, int m, int n_spectrum,
                                     int horizon, const SpectrumOptions& sopt = {},
                                     const DominationOptions& dopt = {}) {
    if (p < 1 || p >= c.dim()) throw InvalidInput("classify_point: p must lie in [1, d-1]");
    Classification out;
    out.spectrum = spectrum(c, x, n_spectrum, std::min(p + 1, c.dim()), sopt);
    try {
        out.splitting = oseledets_splitting(c, x, p, n_spectrum, sopt);
        out.gap = out.splitting->gap;
    } catch (const GapMissing& g) {
        out.kind = PointClass::no_gap;
        out.gap = g.gap();
        return out;
    }
    if (c.base().is_periodic()) {
        out.kind = PointClass::periodic_case;
        return out;
    }
    out.certificate = check_ell_domination(c, x, *out.splitting, m, horizon, dopt);
    switch (out.certificate->verdict) {
        case Verdict::dominated: out.kind = PointClass::in_Lambda; break;
        case Verdict::failed_NB: out.kind = PointClass::in_Gamma_NB; break;
        case Verdict::failed_ND: out.kind = PointClass::in_Gamma_ND; break;
        case Verdict::no_gap: out.kind = PointClass::no_gap; break;
    }
    return out;
}

struct AngleProfile {
    double gamma_min = std::numbers::pi / 2;
    std::vector<double> angles;
    // Angle at the anchor between E1 and the forward-invariant slow subspace
    // (complement of the leading right singular frame of A^n(x)).
    double eigen_angle = std::numbers::pi / 2;
};

inline AngleProfile angle_profile(const CocycleField& c, const BasePoint& x, const OseledetsSplitting& split,
                                  int horizon, int n_slow = 200) {
    AngleProfile out;
    Matrix e1 = split.e1;
    BasePoint y = x;
    for (int i = 0; i < horizon; ++i) {
        const Matrix e2 = orthogonal_complement(e1);
        const double a = e2.cols() > 0 ? subspace_angle(e1, e2) : std::numbers::pi / 2;
        out.angles.push_back(a);
        out.gamma_min = std::min(out.gamma_min, a);
        e1 = orthonormalize(c.value(y) * e1, "transported E1");
        y = step(c.base(), y);
    }
    const auto lim = limit_operator_estimate(c, x, n_slow);
    const int p = split.index_p;
    if (p < c.dim()) out.eigen_angle = subspace_angle(split.e1, lim.right_frame.rightCols(c.dim() - p));
    return out;
}

}  // namespace oslab
