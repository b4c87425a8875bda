#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rsi/sphere.hpp"

using namespace rsi;

constexpr double kPi = std::numbers::pi;

TEST(Sphere, RejectsNonPowerOfTwo) {
    EXPECT_THROW(SphereFunction(std::vector<double>(3, 1.0)), std::invalid_argument);
    EXPECT_THROW(SphereFunction(std::vector<double>{1.0, NAN}), std::invalid_argument);
}

TEST(Sphere, ProjectConstantToZero) {
    const auto p = project_cancellation(SphereFunction::constant(64, 3.0));
    for (double v : p.values()) EXPECT_EQ(v, 0.0);
}

TEST(Sphere, ProjectFourArcs) {
    const auto p = project_cancellation(SphereFunction({5, 1, 1, 1}));
    EXPECT_EQ(p.values(), (std::vector<double>{3, -1, -1, -1}));
}

TEST(Sphere, ProjectCosineUnchanged) {
    const auto c = SphereFunction::cosine(1024);
    const auto p = project_cancellation(c);
    for (int a = 0; a < 1024; ++a) EXPECT_NEAR(p.value(a), c.value(a), 1e-15);
}

TEST(Sphere, ProjectIsIdempotent) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto once = project_cancellation(SphereFunction::random(256, seed));
        const auto twice = project_cancellation(once);
        const double scale = linf_norm(once);
        for (int a = 0; a < 256; ++a) EXPECT_LE(std::abs(once.value(a) - twice.value(a)), 1e-14 * scale);
        double sum = 0.0;
        for (double v : once.values()) sum += v;
        EXPECT_LE(std::abs(sum), 1e-14 * l1_norm(once) * 256);
    }
}

TEST(Sphere, NormsOfConstants) {
    EXPECT_EQ(l1_norm(SphereFunction::zero(16)), 0.0);
    EXPECT_EQ(llogl_norm(SphereFunction::zero(16)), 0.0);
    EXPECT_EQ(linf_norm(SphereFunction::zero(16)), 0.0);
    const auto one = SphereFunction::constant(16, 1.0);
    EXPECT_NEAR(l1_norm(one), 2 * kPi, 1e-14);
    EXPECT_NEAR(llogl_norm(one), 2 * kPi * std::log(3.0), 1e-14);
}

TEST(Sphere, CosineL1MatchesAnalytic) {
    for (int n : {64, 256, 1024}) {
        const double err = std::abs(l1_norm(SphereFunction::cosine(n)) - 4.0);
        EXPECT_LE(err, 8.0 * std::pow(2 * kPi / n, 2));
    }
}

TEST(Sphere, COmegaZeroAndConstant) {
    EXPECT_EQ(c_omega(SphereFunction::zero(8)), 0.0);
    EXPECT_NEAR(c_omega(SphereFunction::constant(8, 1.0)), 2 * kPi * (1 + std::log(3.0)), 1e-13);
}

TEST(Sphere, COmegaSingleArcByDirectSum) {
    std::vector<double> v(16, 0.0);
    v[5] = 1024.0;
    const SphereFunction om(v);
    const double w = 2 * kPi / 16;
    const double l1 = 1024.0 * w;
    const double expect = 1024.0 * std::log(1026.0) * w + 1024.0 * (1.0 + std::log(1024.0 / l1)) * w;
    EXPECT_NEAR(c_omega(om), expect, 1e-10 * expect);
}

TEST(Sphere, SplitCosineBelowThreshold) {
    const auto [big, small] = split_omega(SphereFunction::cosine(256), 4, 0.1);
    EXPECT_EQ(l1_norm(big), 0.0);
    EXPECT_EQ(small, SphereFunction::cosine(256));
}

TEST(Sphere, SplitKeepsBigArcs) {
    std::vector<double> v(256, 0.01);
    v[0] = 100;
    v[1] = -100;
    const SphereFunction om(v);
    // threshold 2^{eta s} ||Omega||_1 with eta s chosen to land near 8
    const double l1 = l1_norm(om);
    const double eta = std::log2(8.0 / l1);
    ASSERT_GT(eta, 0.0);
    const auto [big, small] = split_omega(om, 1, eta);
    for (int a = 0; a < 256; ++a) {
        EXPECT_EQ(big.value(a), a < 2 ? v[a] : 0.0);
        EXPECT_EQ(big.value(a) + small.value(a), v[a]);
    }
}

TEST(Sphere, SplitProperties) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
        const auto om = project_cancellation(SphereFunction::random(128, rng()));
        const int s = 1 + static_cast<int>(rng() % 12);
        const double eta = 0.02 + 0.3 * (rng() % 100) / 100.0;
        const auto [big, small] = split_omega(om, s, eta);
        const double thr = split_threshold(om, s, eta);
        EXPECT_TRUE(linf_norm(small) < thr || l1_norm(small) == 0.0);
        EXPECT_DOUBLE_EQ(l1_norm(big) + l1_norm(small), l1_norm(om));
        for (int a = 0; a < 128; ++a) EXPECT_EQ(big.value(a) + small.value(a), om.value(a));
    }
}

TEST(Sphere, SplitZeroKernel) {
    const auto [big, small] = split_omega(SphereFunction::zero(8), 3, 0.1);
    EXPECT_EQ(l1_norm(big), 0.0);
    EXPECT_EQ(l1_norm(small), 0.0);
    EXPECT_THROW(split_omega(SphereFunction::zero(8), 0, 0.1), std::invalid_argument);
    EXPECT_THROW(split_omega(SphereFunction::zero(8), 1, 0.0), std::invalid_argument);
}

TEST(Sphere, NormOrdering) {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const auto om = project_cancellation(SphereFunction::random(512, seed));
        EXPECT_GE(c_omega(om), llogl_norm(om));
        EXPECT_GE(llogl_norm(om), l1_norm(om) * std::log(2.0));
    }
}

TEST(Sphere, AntipodalArcs) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 10000; ++t) {
        const double x = u(rng), y = u(rng);
        if (x == 0.0 && y == 0.0) continue;
        const int a = SphereFunction::arc_index(x, y, 256), b = SphereFunction::arc_index(-x, -y, 256);
        EXPECT_EQ((a + 128) % 256, b);
    }
    EXPECT_EQ(SphereFunction::arc_index(1, 0, 8), 0);
    EXPECT_EQ(SphereFunction::arc_index(-1, 0, 8), 4);
    EXPECT_EQ(SphereFunction::arc_index(0, 1, 8), 2);
}
