#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "oslab/operator_core.hpp"

namespace oslab::testing {

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = g(rng);
    return m;
}

inline Matrix random_orthogonal(std::mt19937_64& rng, int d) {
    Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, d, d));
    return qr.householderQ() * Matrix::Identity(d, d);
}

// U diag(s) V^T with singular values drawn from [lo, hi].
inline Matrix random_with_singular_values(std::mt19937_64& rng, int d, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vector s(d);
    for (int i = 0; i < d; ++i) s(i) = u(rng);
    return random_orthogonal(rng, d) * s.asDiagonal() * random_orthogonal(rng, d).transpose();
}

// Singular values from Eigen's divide-and-conquer SVD, independent of the library's Jacobi path.
inline Vector oracle_singular_values(const Matrix& m) { return Eigen::BDCSVD<Matrix>(m).singularValues(); }

// p x p minor determinant through Eigen's LU.
inline double oracle_minor(const Matrix& a, const std::vector<int>& rows, const std::vector<int>& cols) {
    const int p = static_cast<int>(rows.size());
    Matrix s(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) s(i, j) = a(rows[i], cols[j]);
    return s.determinant();
}

}  // namespace oslab::testing
