#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oslab/perturbation.hpp"
#include "test_util.hpp"

using namespace oslab;

namespace {

Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

const BaseSystem fixed = BaseSystem::periodic(1);
const BasePoint x0 = periodic_point(fixed, 0);

}  // namespace

TEST(MaxRotationAngle, InvertsTheBound) {
    const double xi = max_rotation_angle(1.01, 0.2);
    EXPECT_NEAR(1.01 * 2 * std::sin(xi / 2), 0.2, 1e-15);
    EXPECT_NEAR(max_rotation_angle(1.0, 5.0), std::numbers::pi, 1e-15);
    EXPECT_EQ(max_rotation_angle(0.0, 1e-3), std::numbers::pi);
}

TEST(RotateAtPoint, ZeroAngleIsIdentityPatch) {
    const auto c = CocycleField::constant(fixed, diag2(1.01, 1));
    const auto r = rotate_at_point(c, x0, PlaneRotation{0, 1, 0.0}, 0.2);
    EXPECT_EQ(r.field.value(x0), diag2(1.01, 1));
    EXPECT_EQ(r.distance, 0.0);
}

TEST(RotateAtPoint, DistanceOfSmallRotation) {
    const auto c = CocycleField::constant(fixed, diag2(1.01, 1));
    const auto r = rotate_at_point(c, x0, PlaneRotation{0, 1, 0.1}, 0.2);
    EXPECT_NEAR(r.distance, 1.01 * 2 * std::sin(0.05), 1e-12);
    EXPECT_NEAR(cocycle_distance(c, r.field, {}), r.distance, 0.0);
    EXPECT_LE(r.distance, 0.2);
    // B = A R on the plane.
    EXPECT_LT((r.field.value(x0) - diag2(1.01, 1) * PlaneRotation{0, 1, 0.1}.matrix(2)).norm(), 1e-15);
}

TEST(RotateAtPoint, OnlyThePatchedPointChanges) {
    const auto p = BaseSystem::periodic(7);
    std::mt19937_64 rng(2);
    std::vector<Matrix> table;
    for (int i = 0; i < 7; ++i) table.push_back(oslab::testing::random_matrix(rng, 3, 3));
    const CocycleField c(p, PerOrbitIndexRule{table});
    const auto x = periodic_point(p, 2);
    const auto r = rotate_at_point(c, x, PlaneRotation{0, 2, 0.05}, 10.0);
    for (const auto& y : orbit(p, periodic_point(p, 0), 6))
        if (!(y == x)) EXPECT_EQ(r.field.value(y), c.value(y));
    EXPECT_NE(r.field.value(x), c.value(x));
}

TEST(RotateAtPoint, AngleBeyondBudgetReportsMaximum) {
    const auto c = CocycleField::constant(fixed, diag2(1.01, 1));
    try {
        rotate_at_point(c, x0, PlaneRotation{0, 1, std::numbers::pi / 2}, 0.2);
        FAIL();
    } catch (const AngleTooLarge& e) {
        EXPECT_NEAR(e.max_angle(), 2 * std::asin(0.2 / 2.02), 1e-15);
    }
}

TEST(RotateAtPoint, QuarterTurnOfRankOneIsNilpotent) {
    const auto c = CocycleField::constant(fixed, diag2(1.01, 0));
    const auto r = rotate_at_point(c, x0, PlaneRotation{0, 1, std::numbers::pi / 2}, 2.1);
    Matrix expected(2, 2);
    expected << 0, -1.01, 0, 0;
    EXPECT_EQ(r.field.value(x0), expected);
    EXPECT_EQ(Matrix(expected * expected), Matrix(Matrix::Zero(2, 2)));
    EXPECT_EQ(spectrum(r.field, x0, 100, 2).raw[0], minus_infinity);
}

TEST(KillDirection, FullPlaneExample) {
    const auto c = CocycleField::constant(fixed, diag2(1.01, 1e-15));
    const auto k = kill_direction(c, x0, 2, 50, 1e-9);
    EXPECT_EQ(k.report.site, 0);
    EXPECT_EQ(k.report.v, Vector(Vector::Unit(2, 1)));
    EXPECT_EQ(k.field.value(x0), diag2(1.01, 0));
    EXPECT_EQ(k.report.rank, 1);
    EXPECT_EQ(k.report.wedge_norm, 0.0);
    EXPECT_LE(k.report.distance, k.report.norm_av);
    EXPECT_LT(k.report.distance, 1e-9);
}

TEST(KillDirection, LaterSiteAndOnlyOneColumnChanges) {
    const auto p = BaseSystem::periodic(5);
    const auto c = CocycleField(p, PerOrbitIndexRule{{diag2(2, 0.5), diag2(2, 0.5), diag2(2, 0.5),
                                                      diag2(1e-12, 0.5), diag2(2, 0.5)}});
    const auto x = periodic_point(p, 0);
    Matrix e1(2, 1);
    e1 << 1, 0;
    OseledetsSplitting s;
    s.index_p = 1;
    s.e1 = e1;
    s.e2 = orthogonal_complement(e1);
    s.anchor = x;
    const auto k = kill_direction(c, x, s, 10, 1e-6);
    EXPECT_EQ(k.report.site, 3);
    EXPECT_EQ(k.field.value(periodic_point(p, 3)), diag2(0, 0.5));
    EXPECT_NEAR(k.report.distance, 1e-12, 1e-27);
    EXPECT_EQ(k.field.patches().size(), 1u);
}

TEST(KillDirection, NoSmallDirection) {
    const auto b = BaseSystem::bernoulli({0.5, 0.5}, 3);
    const CocycleField c(b, PerSymbolRule{{diag2(2, 0.5), diag2(0.5, 1)}});
    const auto x = sample_measure(b, 1)[0];
    EXPECT_THROW(kill_direction(c, x, 2, 100, 1e-3), NbNotPresent);
}

TEST(MixDirections, TooFewStepsReportsMinimalM) {
    const auto b = BaseSystem::bernoulli({0.5, 0.5}, 13);
    const auto c = CocycleField::constant(b, diag2(1.01, 1));
    const auto x = sample_measure(b, 1)[0];
    const auto s = oseledets_splitting(c, x, 1, 2000);
    try {
        mix_directions(c, x, s, 1, 0.2);
        FAIL();
    } catch (const NeedsLargerM& e) {
        // A quarter turn at most xi_max per step needs at least ceil((pi/2) / xi_max) steps.
        const int lower = static_cast<int>(std::ceil(std::numbers::pi / 2 / max_rotation_angle(1.01, 0.2)));
        EXPECT_GE(e.minimal_m(), lower);
        EXPECT_LE(e.minimal_m(), 16);
        EXPECT_NO_THROW(mix_directions(c, x, s, e.minimal_m(), 0.2));
        EXPECT_THROW(mix_directions(c, x, s, e.minimal_m() - 1, 0.2), NeedsLargerM);
    }
}

TEST(MixDirections, SixteenStepsCarryE1IntoImageOfE2) {
    const auto b = BaseSystem::bernoulli({0.5, 0.5}, 13);
    const auto c = CocycleField::constant(b, diag2(1.01, 1));
    const auto x = sample_measure(b, 1)[0];
    const auto s = oseledets_splitting(c, x, 1, 2000);
    const auto m = mix_directions(c, x, s, 16, 0.2);
    EXPECT_NEAR(m.report.hypothesis_ratio, std::pow(1 / 1.01, 16), 1e-12);
    EXPECT_LT(m.report.residual_angle, 1e-9);
    EXPECT_LT(m.report.max_step_distance, 0.2);
    EXPECT_EQ(m.report.step_angles.size(), 16u);
    double total = 0.0;
    for (double a : m.report.step_angles) total += a;
    EXPECT_GT(total, std::numbers::pi / 2 - 1e-12);
    // The image of v = e1 lies on span(e2) = A^16 E2.
    EXPECT_LT(std::abs(m.report.w(0)) / m.report.w.norm(), 1e-9);
    // Re-verify the budget independently.
    EXPECT_LE(cocycle_distance(c, m.field, orbit(b, x, 15)), 0.2);
    EXPECT_EQ(m.field.patches().size(), 16u);
    const auto after = orbit(b, x, 20);
    for (int j = 16; j <= 20; ++j) EXPECT_EQ(m.field.value(after[j]), c.value(after[j]));
}

TEST(MixDirections, StronglyDominatedFailsHypothesis) {
    const auto b = BaseSystem::bernoulli({0.5, 0.5}, 13);
    const auto c = CocycleField::constant(b, diag2(2, 0.5));
    const auto x = sample_measure(b, 1)[0];
    const auto s = oseledets_splitting(c, x, 1, 500);
    try {
        mix_directions(c, x, s, 1, 0.2);
        FAIL();
    } catch (const HypothesisFailed& e) {
        EXPECT_NEAR(e.ratio(), 0.25, 1e-14);
    }
}

TEST(MixDirections, RevisitedSitesAreRejected) {
    const auto c = CocycleField::constant(fixed, diag2(1.01, 1));
    Matrix e1(2, 1);
    e1 << 1, 0;
    OseledetsSplitting s;
    s.index_p = 1;
    s.e1 = e1;
    s.e2 = orthogonal_complement(e1);
    s.anchor = x0;
    EXPECT_THROW(mix_directions(c, x0, s, 2, 0.2), InvalidInput);
}

TEST(EntropyDropBound, BothBranches) {
    EXPECT_NEAR(entropy_drop_bound({std::log(1.01), 0.0}, 1, 1e-3), std::log(1.01) / 2 + 1e-3, 1e-15);
    EXPECT_NEAR(entropy_drop_bound({1.0, 0.5, 0.2}, 2, 0.1), 1.0 + 0.35 + 0.1, 1e-15);
    EXPECT_EQ(entropy_drop_bound({1.0, minus_infinity}, 1, 1e-3), -1e-3);
}

TEST(GlobalPerturbation, EllipticFixedPoint) {
    const auto c = CocycleField::constant(fixed, diag2(1.01, 1));
    PerturbationConfig cfg;
    cfg.xi = 0.1;
    const auto r = global_perturbation(c, 1, 1, 0.2, 1e-3, cfg);
    ASSERT_TRUE(r.applied);
    EXPECT_NEAR(r.le_before, std::log(1.01), 1e-12);
    EXPECT_NEAR(r.le_after, std::log(1.01) / 2, 1e-3);
    EXPECT_TRUE(r.bound_met);
    EXPECT_LE(r.distance, 0.2);
    EXPECT_NEAR(r.distance, 1.01 * 2 * std::sin(0.05), 1e-12);
    EXPECT_EQ(r.points.front().kind, PerturbationKind::rotate);
}

TEST(GlobalPerturbation, DominatedIsNoOp) {
    const auto b = BaseSystem::bernoulli({0.5, 0.5}, 9);
    const auto c = CocycleField::constant(b, diag2(2, 0.5));
    PerturbationConfig cfg;
    cfg.sample_count = 4;
    cfg.horizon = 100;
    const auto r = global_perturbation(c, 1, 1, 0.1, 1e-3, cfg);
    EXPECT_FALSE(r.applied);
    EXPECT_EQ(r.status, "nothing_to_perturb");
    EXPECT_TRUE(r.field.patches().empty());
    EXPECT_EQ(r.le_before, r.le_after);
    EXPECT_EQ(r.distance, 0.0);
}

TEST(GlobalPerturbation, NonDegeneracyFailureIsKilled) {
    const auto b = BaseSystem::bernoulli({0.5, 0.5}, 33);
    const CocycleField c(b, PerSymbolRule{{diag2(2, 0.5), diag2(1e-10, 1e-11)}});
    PerturbationConfig cfg;
    cfg.sample_count = 3;
    cfg.horizon = 200;
    const auto r = global_perturbation(c, 1, 1, 0.1, 1e-3, cfg);
    ASSERT_TRUE(r.applied);
    for (const auto& p : r.points) EXPECT_EQ(p.kind, PerturbationKind::kill);
    EXPECT_LT(r.le_after, r.le_before - 1.0);
    EXPECT_TRUE(r.bound_met);
    EXPECT_LE(r.distance, 1e-10 * (1 + 1e-12));
}

TEST(GapFormula, Examples) {
    EXPECT_EQ(gap_formula_n(std::log(2.0), -std::log(2.0), 1e-3), 1);
    EXPECT_EQ(gap_formula_n(std::log(1.1), 0.0, 1e-3), 8);
    // -inf branch: eps' = eps when lambda_p > -eps.
    EXPECT_EQ(gap_formula_n(std::log(1.01), minus_infinity, 1e-3),
              static_cast<int>(std::floor(std::log(2.0) / (std::log(1.01) + 1e-3))) + 1);
    for (double g : {0.01, 0.3, 1.0, 5.0}) {
        const int n = gap_formula_n(g, 0.0, 1e-3);
        EXPECT_LT(std::exp(-n * g), 0.5);
        if (n > 1) EXPECT_GE(std::exp(-(n - 1) * g), 0.5);
    }
}

TEST(Probe, Branches) {
    ProbeConfig cfg;
    cfg.sample_count = 3;
    {
        const auto b = BaseSystem::bernoulli({0.5, 0.5}, 1);
        const auto r = dichotomy_probe(CocycleField::constant(b, Matrix::Zero(2, 2)), cfg);
        ASSERT_EQ(r.records.size(), 3u);
        for (const auto& rec : r.records) EXPECT_EQ(rec.branch, ProbeBranch::null_spectrum);
    }
    {
        const auto r = dichotomy_probe(CocycleField::constant(fixed, diag2(2, 0.5)), cfg);
        ASSERT_EQ(r.records.size(), 1u);
        EXPECT_EQ(r.records[0].branch, ProbeBranch::dominated);
        EXPECT_EQ(r.records[0].gap_formula_n, 1);
        EXPECT_EQ(r.records[0].m, 1);
        EXPECT_TRUE(*r.records[0].gap_formula_certified);
    }
    {
        ProbeConfig e = cfg;
        e.m = 1;
        e.delta = 0.2;
        const auto r = dichotomy_probe(CocycleField::constant(fixed, diag2(1.01, 1)), e);
        ASSERT_EQ(r.records.size(), 1u);
        const auto& rec = r.records[0];
        EXPECT_EQ(rec.branch, ProbeBranch::perturbed);
        EXPECT_GE(rec.le_before - rec.le_after, 0.004);
        EXPECT_LE(rec.distance, 0.102);
        EXPECT_TRUE(rec.drop_met);
    }
    {
        const auto p2 = BaseSystem::periodic(2);
        const CocycleField swap(p2, PerOrbitIndexRule{{diag2(2, 0.5), diag2(0.5, 2)}});
        const auto r = dichotomy_probe(swap, cfg);
        for (const auto& rec : r.records) EXPECT_EQ(rec.branch, ProbeBranch::no_gap);
    }
}
