#pragma once

// Finite-truncation linear algebra for compact operators: representation,
// norms, SVD, plane rotations and compound matrices (exterior powers).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "oslab/errors.hpp"

namespace oslab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double minus_infinity = -std::numeric_limits<double>::infinity();
inline constexpr std::size_t default_compound_cap = 10000;

/// A compact operator on a separable Hilbert space, represented by its leading
/// d x d block plus an operator-norm bound on the discarded tail.
class TruncatedOperator {
public:
    TruncatedOperator() = default;

    explicit TruncatedOperator(Matrix entries, double tail_bound = 0.0)
        : entries_(std::move(entries)), tail_bound_(tail_bound) {
        if (entries_.rows() != entries_.cols() || entries_.rows() == 0)
            throw InvalidInput("TruncatedOperator: entries must be a non-empty square matrix");
        if (!entries_.allFinite())
            throw InvalidInput("TruncatedOperator: entries must be finite");
        if (!(tail_bound_ >= 0.0) || !std::isfinite(tail_bound_))
            throw InvalidInput("TruncatedOperator: tail_bound must be finite and >= 0");
    }

    static TruncatedOperator identity(int d) { return TruncatedOperator(Matrix::Identity(d, d)); }
    static TruncatedOperator zero(int d) { return TruncatedOperator(Matrix::Zero(d, d)); }
    static TruncatedOperator diagonal(const std::vector<double>& diag) {
        Vector v = Eigen::Map<const Vector>(diag.data(), static_cast<Eigen::Index>(diag.size()));
        return TruncatedOperator(Matrix(v.asDiagonal()));
    }

    int dim() const noexcept { return static_cast<int>(entries_.rows()); }
    const Matrix& entries() const noexcept { return entries_; }
    double tail_bound() const noexcept { return tail_bound_; }

private:
    Matrix entries_;
    double tail_bound_ = 0.0;
};

inline double spectral_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

inline double operator_norm(const TruncatedOperator& a) { return spectral_norm(a.entries()); }

/// Product A*B (apply B first). The tail bound follows from splitting each
/// factor as block + tail and bounding the three cross terms.
inline TruncatedOperator compose(const TruncatedOperator& a, const TruncatedOperator& b) {
    if (a.dim() != b.dim())
        throw InvalidInput("compose: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                           std::to_string(b.dim()) + ")");
    const double tail = operator_norm(a) * b.tail_bound() +
                        a.tail_bound() * (operator_norm(b) + b.tail_bound());
    return TruncatedOperator(a.entries() * b.entries(), tail);
}

struct SvdResult {
    Vector sigma;  // descending
    Matrix u;      // left singular vectors (columns)
    Matrix v;      // right singular vectors (columns)
};

namespace detail {

inline bool lex_greater(const Vector& a, const Vector& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) > b(i)) return true;
        if (a(i) < b(i)) return false;
    }
    return false;
}

}  // namespace detail

/// Full SVD with a canonical form: sigma descending, each right singular
/// vector's leading nonzero entry made nonnegative, exact ties ordered by
/// lexicographically decreasing right vector.
inline SvdResult svd(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> dec(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    SvdResult r{dec.singularValues(), dec.matrixU(), dec.matrixV()};
    const Eigen::Index n = r.sigma.size();
    for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index i = 0; i < r.v.rows(); ++i) {
            if (r.v(i, c) != 0.0) {
                if (r.v(i, c) < 0.0) {
                    r.v.col(c) *= -1.0;
                    r.u.col(c) *= -1.0;
                }
                break;
            }
        }
    }
    // Stable reordering of exactly tied blocks.
    for (Eigen::Index s = 0; s < n;) {
        Eigen::Index e = s + 1;
        while (e < n && r.sigma(e) == r.sigma(s)) ++e;
        for (Eigen::Index i = s + 1; i < e; ++i) {
            for (Eigen::Index j = i; j > s && detail::lex_greater(r.v.col(j), r.v.col(j - 1)); --j) {
                r.v.col(j).swap(r.v.col(j - 1));
                r.u.col(j).swap(r.u.col(j - 1));
            }
        }
        s = e;
    }
    return r;
}

inline SvdResult svd(const TruncatedOperator& a) { return svd(a.entries()); }

inline Vector singular_values(const Matrix& m) {
    if (m.size() == 0) return Vector();
    return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

/// cos and sin of `angle`, exact at integer multiples of pi/2 (where the
/// libm values carry a 1e-16 residue that would break exact nilpotency).
inline std::pair<double, double> cos_sin(double angle) {
    const double quarter = std::numbers::pi / 2;
    const double k = std::round(angle / quarter);
    if (std::abs(angle - k * quarter) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(angle))) {
        static constexpr double cs[4][2] = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
        const auto idx = static_cast<std::size_t>(((static_cast<long long>(k) % 4) + 4) % 4);
        return {cs[idx][0], cs[idx][1]};
    }
    return {std::cos(angle), std::sin(angle)};
}

/// Rotation by `angle` in the coordinate plane (i, j); identity elsewhere.
struct PlaneRotation {
    int i = 0;
    int j = 1;
    double angle = 0.0;

    Matrix matrix(int d) const {
        if (i == j || i < 0 || j < 0 || i >= d || j >= d)
            throw InvalidInput("PlaneRotation: indices must be distinct and < d");
        Matrix r = Matrix::Identity(d, d);
        const auto [c, s] = cos_sin(angle);
        r(i, i) = c;
        r(i, j) = -s;
        r(j, i) = s;
        r(j, j) = c;
        return r;
    }
};

/// Rotation by `angle` in span(e, f) carrying e toward f; e and f must be
/// orthonormal. Identity on the orthogonal complement.
inline Matrix rotation_in_plane(const Vector& e, const Vector& f, double angle) {
    const Eigen::Index d = e.size();
    const auto [c, s] = cos_sin(angle);
    Matrix r = Matrix::Identity(d, d);
    r += (c - 1.0) * (e * e.transpose() + f * f.transpose());
    r += s * (f * e.transpose() - e * f.transpose());
    return r;
}

inline std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        const std::size_t num = n - k + i;
        if (r > std::numeric_limits<std::size_t>::max() / num) return std::numeric_limits<std::size_t>::max();
        r = r * num / i;
    }
    return r;
}

/// All p-subsets of {0..d-1} in lexicographic order.
inline std::vector<std::vector<int>> lex_subsets(int d, int p) {
    std::vector<std::vector<int>> out;
    if (p < 0 || p > d) return out;
    std::vector<int> s(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) s[static_cast<std::size_t>(i)] = i;
    while (true) {
        out.push_back(s);
        int i = p - 1;
        while (i >= 0 && s[static_cast<std::size_t>(i)] == d - p + i) --i;
        if (i < 0) break;
        ++s[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < p; ++j) s[static_cast<std::size_t>(j)] = s[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

namespace detail {

inline constexpr double lu_pivot_threshold = 1e-14;

// Determinant of the minor of `a` on (rows, cols); exact cofactor expansion
// for orders up to 3, partial-pivot LU above.
inline double minor_det(const Matrix& a, const std::vector<int>& rows, const std::vector<int>& cols) {
    const std::size_t p = rows.size();
    auto at = [&](std::size_t r, std::size_t c) { return a(rows[r], cols[c]); };
    if (p == 1) return at(0, 0);
    if (p == 2) return at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0);
    if (p == 3) {
        return at(0, 0) * (at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1)) -
               at(0, 1) * (at(1, 0) * at(2, 2) - at(1, 2) * at(2, 0)) +
               at(0, 2) * (at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0));
    }
    Matrix m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t c = 0; c < p; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = at(r, c);
    const double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    double det = 1.0;
    const auto n = static_cast<Eigen::Index>(p);
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Index piv;
        const double pv = m.col(k).tail(n - k).cwiseAbs().maxCoeff(&piv);
        if (pv < lu_pivot_threshold * scale) return 0.0;
        piv += k;
        if (piv != k) {
            m.row(k).swap(m.row(piv));
            det = -det;
        }
        det *= m(k, k);
        for (Eigen::Index r = k + 1; r < n; ++r) {
            const double f = m(r, k) / m(k, k);
            m.row(r).tail(n - k) -= f * m.row(k).tail(n - k);
        }
    }
    return det;
}

}  // namespace detail

/// p-th compound matrix of `a`: entries are the p x p minors indexed by
/// lexicographically ordered p-subsets of rows and columns.
inline Matrix compound_matrix(const Matrix& a, int p, std::size_t cap = default_compound_cap) {
    const int d = static_cast<int>(a.rows());
    if (a.rows() != a.cols()) throw InvalidInput("exterior_power: matrix must be square");
    if (p < 1 || p > d)
        throw InvalidInput("exterior_power: p = " + std::to_string(p) + " out of range [1, " + std::to_string(d) + "]");
    const std::size_t n = binomial(static_cast<std::size_t>(d), static_cast<std::size_t>(p));
    if (n > cap) throw CapacityError(n, cap);
    if (p == 1) return a;
    const auto subsets = lex_subsets(d, p);
    const auto dim = static_cast<Eigen::Index>(n);
    Matrix out(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r)
        for (Eigen::Index c = 0; c < dim; ++c)
            out(r, c) = detail::minor_det(a, subsets[static_cast<std::size_t>(r)], subsets[static_cast<std::size_t>(c)]);
    return out;
}

inline TruncatedOperator exterior_power(const TruncatedOperator& a, int p, std::size_t cap = default_compound_cap) {
    Matrix c = compound_matrix(a.entries(), p, cap);
    // Norm of the tail part of the compound is bounded by the p-fold product bound.
    double tail = 0.0;
    if (a.tail_bound() > 0.0) {
        const double na = operator_norm(a);
        tail = std::pow(na + a.tail_bound(), p) - std::pow(na, p);
    }
    return TruncatedOperator(std::move(c), tail);
}

/// Orthonormal basis of span(columns of `basis`); throws on rank deficiency.
inline Matrix orthonormalize(const Matrix& basis, const char* what = "basis") {
    if (basis.cols() == 0 || basis.cols() > basis.rows())
        throw InvalidInput(std::string("degenerate ") + what);
    Eigen::HouseholderQR<Matrix> qr(basis);
    const Matrix r = qr.matrixQR().topRows(basis.cols()).triangularView<Eigen::Upper>();
    const double scale = basis.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < basis.cols(); ++i)
        if (!(std::abs(r(i, i)) > 1e-12 * scale)) throw InvalidInput(std::string("degenerate ") + what);
    return qr.householderQ() * Matrix::Identity(basis.rows(), basis.cols());
}

/// Orthonormal basis of the orthogonal complement of span(q), q orthonormal columns.
inline Matrix orthogonal_complement(const Matrix& q) {
    const Eigen::Index d = q.rows(), p = q.cols();
    if (p == 0) return Matrix::Identity(d, d);
    Eigen::HouseholderQR<Matrix> qr(q);
    Matrix full = qr.householderQ() * Matrix::Identity(d, d);
    return full.rightCols(d - p);
}

/// Cosines of the principal angles between two subspaces (descending).
inline Vector principal_cosines(const Matrix& e, const Matrix& f) {
    if (e.rows() != f.rows()) throw InvalidInput("subspace_angle: ambient dimensions differ");
    const Matrix qe = orthonormalize(e, "basis E");
    const Matrix qf = orthonormalize(f, "basis F");
    return singular_values(qe.transpose() * qf);
}

/// Minimal principal angle between span(E) and span(F), in [0, pi/2].
inline double subspace_angle(const Matrix& e, const Matrix& f) {
    const Vector c = principal_cosines(e, f);
    return std::acos(std::clamp(c.size() ? c(0) : 0.0, 0.0, 1.0));
}

/// Largest principal angle between two subspaces of equal dimension; zero iff they coincide.
inline double subspace_distance(const Matrix& e, const Matrix& f) {
    if (e.cols() != f.cols()) throw InvalidInput("subspace_distance: dimensions differ");
    const Vector c = principal_cosines(e, f);
    return std::acos(std::clamp(c(c.size() - 1), 0.0, 1.0));
}

/// Rank counted as the number of nonzero pivots of a full-pivot LU, with no
/// tolerance. Meant for matrices whose deficiency is structurally exact.
inline int exact_rank(const Matrix& m) {
    Eigen::FullPivLU<Matrix> lu(m);
    lu.setThreshold(0.0);
    const Matrix& lum = lu.matrixLU();
    int r = 0;
    for (Eigen::Index i = 0; i < std::min(lum.rows(), lum.cols()); ++i)
        if (lum(i, i) != 0.0) ++r;
    return r;
}

}  // namespace oslab
