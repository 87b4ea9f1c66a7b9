#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "oslab/base_dynamics.hpp"

using namespace oslab;

TEST(BaseSystem, ValidatesParameters) {
    EXPECT_THROW(BaseSystem::bernoulli({}, 1), InvalidInput);
    EXPECT_THROW(BaseSystem::bernoulli({0.5, 0.6}, 1), InvalidInput);
    EXPECT_THROW(BaseSystem::bernoulli({1.0, 0.0}, 1), InvalidInput);
    EXPECT_NO_THROW(BaseSystem::bernoulli({0.3, 0.7 + 1e-13}, 1));
    EXPECT_THROW(BaseSystem::rotation(0.0, 1), InvalidInput);
    EXPECT_THROW(BaseSystem::rotation(1.0, 1), InvalidInput);
    EXPECT_THROW(BaseSystem::periodic(0), InvalidInput);
}

TEST(Step, PeriodicWrapsAround) {
    const auto s = BaseSystem::periodic(2);
    EXPECT_EQ(step(s, periodic_point(s, 1)).index, 0);
    EXPECT_EQ(inverse_step(s, periodic_point(s, 0)).index, 1);
}

TEST(Step, RotationAddsAlpha) {
    const auto s = BaseSystem::rotation(0.25, 1);
    EXPECT_NEAR(step(s, rotation_point(s, 0.9)).angle(), 0.15, 1e-15);
    const auto y = iterate(s, rotation_point(s, 0.9), -3);
    EXPECT_NEAR(y.angle(), 0.15, 1e-15);
    EXPECT_EQ(iterate(s, y, 3), rotation_point(s, 0.9));
}

TEST(Step, ShiftMovesWindowAndIsReproducible) {
    const auto s = BaseSystem::bernoulli({0.5, 0.5}, 42, 8);
    const auto x = shift_point(s, 99, 0);
    const auto y = step(s, x);
    ASSERT_EQ(y.window.size(), x.window.size());
    for (std::size_t i = 0; i + 1 < x.window.size(); ++i) EXPECT_EQ(y.window[i], x.window[i + 1]);
    EXPECT_EQ(y.window.back(), s.symbol_at(99, 9));
    // Same seed, same stream: identical windows.
    const auto s2 = BaseSystem::bernoulli({0.5, 0.5}, 42, 8);
    EXPECT_EQ(step(s2, shift_point(s2, 99, 0)).window, y.window);
    // Step is a bijection: inverse_step recovers the window exactly.
    EXPECT_EQ(inverse_step(s, y).window, x.window);
    EXPECT_EQ(inverse_step(s, y), x);
}

TEST(SampleMeasure, PeriodicIndicesAreBalanced) {
    const auto s = BaseSystem::periodic(3, 17);
    std::map<int, int> counts;
    for (const auto& x : sample_measure(s, 300)) ++counts[x.index];
    for (int i = 0; i < 3; ++i) {
        EXPECT_GE(counts[i], 70);
        EXPECT_LE(counts[i], 130);
    }
}

TEST(SampleMeasure, RotationAngleInUnitInterval) {
    const auto s = BaseSystem::rotation(0.3, 5);
    const auto xs = sample_measure(s, 1);
    ASSERT_EQ(xs.size(), 1u);
    EXPECT_GE(xs[0].angle(), 0.0);
    EXPECT_LT(xs[0].angle(), 1.0);
}

TEST(SampleMeasure, BernoulliCenterFrequency) {
    const auto s = BaseSystem::bernoulli({0.5, 0.5}, 123);
    int zeros = 0;
    for (const auto& x : sample_measure(s, 1000)) zeros += x.center_symbol() == 0;
    EXPECT_GE(zeros, 450);
    EXPECT_LE(zeros, 550);
}

TEST(SampleMeasure, BiasedSymbolsFollowProbabilities) {
    const auto s = BaseSystem::bernoulli({0.2, 0.8}, 9, 0);
    const auto x = shift_point(s, 1, 0);
    int ones = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) ones += s.symbol_at(1, i);
    // 3 sigma for a Binomial(n, 0.8).
    EXPECT_NEAR(ones / double(n), 0.8, 3 * std::sqrt(0.16 / n));
    EXPECT_EQ(x.window.size(), 1u);
}

TEST(SampleMeasure, SeedDeterminesSample) {
    const auto a = sample_measure(BaseSystem::rotation(0.3, 5), 4);
    const auto b = sample_measure(BaseSystem::rotation(0.3, 5), 4);
    const auto c = sample_measure(BaseSystem::rotation(0.3, 6), 4);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(a[i], b[i]);
    EXPECT_FALSE(a[0] == c[0]);
}

TEST(Orbit, Examples) {
    const auto p = BaseSystem::periodic(2);
    std::vector<int> idx;
    for (const auto& x : orbit(p, periodic_point(p, 0), 3)) idx.push_back(x.index);
    EXPECT_EQ(idx, (std::vector<int>{0, 1, 0, 1}));

    const auto r = BaseSystem::rotation(0.1, 1);
    const auto o = orbit(r, rotation_point(r, 0.0), 2);
    ASSERT_EQ(o.size(), 3u);
    EXPECT_NEAR(o[1].angle(), 0.1, 1e-15);
    EXPECT_NEAR(o[2].angle(), 0.2, 1e-15);

    const auto b = BaseSystem::bernoulli({0.5, 0.5}, 7);
    const auto x = sample_measure(b, 1)[0];
    const auto short_orbit = orbit(b, x, 5);
    const auto long_orbit = orbit(b, x, 10);
    for (std::size_t i = 0; i < short_orbit.size(); ++i) {
        EXPECT_EQ(short_orbit[i], long_orbit[i]);
        EXPECT_EQ(short_orbit[i].window, long_orbit[i].window);
    }
}

TEST(BasePoint, MembershipAndEquality) {
    const auto p = BaseSystem::periodic(4);
    const auto r = BaseSystem::rotation(0.3, 1);
    EXPECT_TRUE(belongs_to(p, periodic_point(p, 3)));
    EXPECT_FALSE(belongs_to(r, periodic_point(p, 3)));
    EXPECT_THROW(periodic_point(p, 4), InvalidInput);
    EXPECT_THROW(rotation_point(r, 1.0), InvalidInput);
    EXPECT_FALSE(periodic_point(p, 1) == periodic_point(p, 2));
}
