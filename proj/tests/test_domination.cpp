#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oslab/domination.hpp"

using namespace oslab;

namespace {

Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

struct Instance {
    CocycleField c;
    BasePoint x;
};

Instance constant_on_shift(const Matrix& a, std::uint64_t seed = 12) {
    const auto b = BaseSystem::bernoulli({0.5, 0.5}, seed);
    return {CocycleField::constant(b, a), sample_measure(b, 1)[0]};
}

CocycleField swap_cocycle() {
    return CocycleField(BaseSystem::periodic(2), PerOrbitIndexRule{{diag2(2, 0.5), diag2(0.5, 2)}});
}

// ||A^l(f^i x) u|| / ||A^l(f^i x) v|| recomputed from the witness by plain multiplication.
double witness_ratio(const CocycleField& c, const BasePoint& x, const DominationWitness& w, int ell) {
    BasePoint y = iterate(c.base(), x, w.orbit_index);
    Matrix p = Matrix::Identity(c.dim(), c.dim());
    for (int j = 0; j < ell; ++j) {
        p = c.value(y) * p;
        y = step(c.base(), y);
    }
    return (p * w.u).norm() / (p * w.v).norm();
}

}  // namespace

TEST(Certificate, StronglyDominatedDiagonal) {
    const auto [c, x] = constant_on_shift(diag2(2, 0.5));
    const auto s = oseledets_splitting(c, x, 1, 500);
    const auto cert = check_ell_domination(c, x, s, 1, 100);
    EXPECT_EQ(cert.verdict, Verdict::dominated);
    EXPECT_NEAR(cert.theta, 2.0, 1e-14);
    EXPECT_NEAR(cert.max_ratio, 0.25, 1e-14);
    EXPECT_FALSE(cert.witness.has_value());
    EXPECT_NEAR(cert.gamma, std::numbers::pi / 2, 1e-14);
    EXPECT_NEAR(cert.implied_ell_step_bound(), 2.0, 1e-14);
}

TEST(Certificate, SlowGrowthNeedsEightSteps) {
    const auto [c, x] = constant_on_shift(diag2(1.1, 1));
    const auto s = oseledets_splitting(c, x, 1, 500);
    const auto c7 = check_ell_domination(c, x, s, 7, 50);
    EXPECT_EQ(c7.verdict, Verdict::failed_ND);
    EXPECT_NEAR(c7.max_ratio, std::pow(1 / 1.1, 7), 1e-12);
    ASSERT_TRUE(c7.witness.has_value());
    EXPECT_NEAR(witness_ratio(c, x, *c7.witness, 7), c7.witness->value, 1e-12);
    const auto c8 = check_ell_domination(c, x, s, 8, 50);
    EXPECT_EQ(c8.verdict, Verdict::dominated);
    EXPECT_NEAR(c8.max_ratio, std::pow(1 / 1.1, 8), 1e-12);
}

TEST(Certificate, MinimalEllMatchesLogOracle) {
    const auto [c, x] = constant_on_shift(diag2(1.1, 1));
    const auto s = oseledets_splitting(c, x, 1, 500);
    const auto r = find_min_ell(c, x, s, 20, 50);
    ASSERT_TRUE(r.ell.has_value());
    // Smallest integer with (1/1.1)^l <= 1/2.
    EXPECT_EQ(*r.ell, static_cast<int>(std::ceil(std::log(2.0) / std::log(1.1))));
    const auto [c2, x2] = constant_on_shift(diag2(2, 0.5));
    EXPECT_EQ(find_min_ell(c2, x2, oseledets_splitting(c2, x2, 1, 500), 5, 50).ell, 1);
}

TEST(Certificate, SwapNeverDominatedOnCoordinateSplitting) {
    const auto c = swap_cocycle();
    const auto x = periodic_point(c.base(), 0);
    Matrix e1(2, 1);
    e1 << 1, 0;
    const auto split = declared_splitting(x, e1);
    const int horizon = effective_horizon(c.base(), 1000);
    EXPECT_EQ(horizon, 2);
    for (int ell = 1; ell <= 64; ++ell) {
        const auto cert = check_ell_domination(c, x, split, ell, horizon);
        ASSERT_EQ(cert.verdict, Verdict::failed_ND) << "ell " << ell;
        ASSERT_TRUE(cert.witness.has_value());
        EXPECT_NEAR(witness_ratio(c, x, *cert.witness, ell), cert.witness->value, 1e-12);
        EXPECT_GT(cert.witness->value, 0.5);
    }
    EXPECT_FALSE(find_min_ell(c, x, split, 64, horizon).ell.has_value());
}

TEST(Certificate, ZeroedColumnFailsNonDegeneracy) {
    const auto p = BaseSystem::periodic(6);
    Matrix killed = diag2(0, 0.5);
    const auto c = CocycleField::constant(p, diag2(1.01, 0.5)).with_patch(periodic_point(p, 4), killed, "zero");
    const auto x = periodic_point(p, 0);
    Matrix e1(2, 1);
    e1 << 1, 0;
    const auto cert = check_ell_domination(c, x, declared_splitting(x, e1), 1, 6);
    EXPECT_EQ(cert.verdict, Verdict::failed_NB);
    ASSERT_TRUE(cert.witness.has_value());
    EXPECT_EQ(cert.witness->orbit_index, 4);
    EXPECT_EQ(cert.witness->value, 0.0);
    EXPECT_EQ(cert.theta, 0.0);
}

TEST(Certificate, RejectsBadArguments) {
    const auto [c, x] = constant_on_shift(diag2(2, 0.5));
    const auto s = oseledets_splitting(c, x, 1, 200);
    EXPECT_THROW(check_ell_domination(c, x, s, 0, 10), InvalidInput);
    EXPECT_THROW(check_ell_domination(c, x, s, 1, 0), InvalidInput);
    EXPECT_THROW(check_ell_domination(c, step(c.base(), x), s, 1, 10), InvalidInput);
}

TEST(Classify, Examples) {
    {
        const auto [c, x] = constant_on_shift(diag2(2, 0.5));
        EXPECT_EQ(classify_point(c, x, 1, 1, 500, 100).kind, PointClass::in_Lambda);
    }
    {
        const auto [c, x] = constant_on_shift(diag2(1.1, 1));
        const auto r = classify_point(c, x, 1, 3, 500, 100);
        EXPECT_EQ(r.kind, PointClass::in_Gamma_ND);
        EXPECT_NEAR(r.certificate->max_ratio, std::pow(1 / 1.1, 3), 1e-12);
    }
    {
        const auto c = swap_cocycle();
        EXPECT_EQ(classify_point(c, periodic_point(c.base(), 0), 1, 1, 2000, 10).kind, PointClass::no_gap);
    }
    {
        const auto c = CocycleField::constant(BaseSystem::periodic(1), diag2(2, 0.5));
        EXPECT_EQ(classify_point(c, periodic_point(c.base(), 0), 1, 1, 500, 10).kind, PointClass::periodic_case);
    }
    {
        const auto b = BaseSystem::bernoulli({0.5, 0.5}, 33);
        const CocycleField c(b, PerSymbolRule{{diag2(2, 0.5), diag2(1e-10, 1e-11)}});
        EXPECT_EQ(classify_point(c, sample_measure(b, 1)[0], 1, 1, 2000, 200).kind, PointClass::in_Gamma_NB);
    }
}

TEST(AngleProfile, DiagonalAnglesAreRight) {
    const auto [c, x] = constant_on_shift(diag2(2, 0.5));
    const auto s = oseledets_splitting(c, x, 1, 200);
    const auto prof = angle_profile(c, x, s, 20);
    ASSERT_EQ(prof.angles.size(), 20u);
    for (double a : prof.angles) EXPECT_NEAR(a, std::numbers::pi / 2, 1e-14);
    EXPECT_NEAR(prof.eigen_angle, std::numbers::pi / 2, 1e-10);
}

TEST(AngleProfile, TriangularEigenAngle) {
    Matrix a(2, 2);
    a << 2, 1, 0, 0.5;
    const auto [c, x] = constant_on_shift(a);
    const auto s = oseledets_splitting(c, x, 1, 200);
    const auto prof = angle_profile(c, x, s, 10);
    EXPECT_NEAR(prof.gamma_min, std::numbers::pi / 2, 1e-12);
    // Slow eigenvector of [[2,1],[0,1/2]] solves 2u + w = u/2, i.e. (1, -3/2).
    Eigen::EigenSolver<Matrix> es(a);
    const int slow = std::abs(es.eigenvalues()(0)) < std::abs(es.eigenvalues()(1)) ? 0 : 1;
    const Vector w = es.eigenvectors().col(slow).real().normalized();
    const double oracle = std::acos(std::abs(w(0)));
    EXPECT_NEAR(oracle, std::acos(1 / std::sqrt(3.25)), 1e-12);
    EXPECT_NEAR(prof.eigen_angle, oracle, 1e-8);
}

TEST(AngleProfile, DominatedShippedShapesKeepAngleAwayFromZero) {
    for (const Matrix& m : {diag2(2, 0.5), diag2(3, 1)}) {
        const auto [c, x] = constant_on_shift(m);
        const auto s = oseledets_splitting(c, x, 1, 200);
        ASSERT_EQ(check_ell_domination(c, x, s, 1, 50).verdict, Verdict::dominated);
        EXPECT_GE(angle_profile(c, x, s, 50).gamma_min, 0.1);
    }
}

TEST(Certificate, OrthogonalComplementOfNonNormalShapeStaysAboveHalf) {
    // With E2 the orthogonal complement of the fast line, ||A^l e2|| / ||A^l e1|| tends to 2/3.
    Matrix a(2, 2);
    a << 2, 1, 0, 0.5;
    const auto [c, x] = constant_on_shift(a);
    const auto s = oseledets_splitting(c, x, 1, 200);
    const auto r = find_min_ell(c, x, s, 30, 5);
    EXPECT_FALSE(r.ell.has_value());
    EXPECT_NEAR(r.certificate.max_ratio, 2.0 / 3.0, 1e-3);
}
