#include <gtest/gtest.h>

#include <random>

#include "rsi/fft.hpp"

using namespace rsi;

namespace {

GridFunction random_grid(int mesh, LatticeBox box, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GridFunction g(mesh, box);
    for (double& v : g.samples()) v = u(rng);
    return g;
}

}  // namespace

TEST(Convolve, MatchesDirectSum) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto a = random_grid(5, LatticeBox::from_extent({-7, 3}, {32, 32}), seed);
        const auto b = random_grid(5, LatticeBox::from_extent({12, -20}, {32, 32}), seed + 100);
        const auto fast = convolve(a, b);
        const auto slow = convolve_direct(a, b);
        EXPECT_EQ(fast.box(), slow.box());
        EXPECT_LE(max_abs_diff(fast, slow), 1e-10 * slow.linf());
    }
}

TEST(Convolve, UnevenShapes) {
    const auto a = random_grid(3, {0, 0, 5, 17}, 1);
    const auto b = random_grid(3, {-3, 2, 30, 4}, 2);
    EXPECT_LE(max_abs_diff(convolve(a, b), convolve_direct(a, b)), 1e-12 * convolve_direct(a, b).linf());
}

TEST(Convolve, DeltaIsIdentity) {
    const int mesh = 4;
    GridFunction delta(mesh, {0, 0, 1, 1});
    delta.ref(0, 0) = 1.0 / delta.cell_area();
    const auto g = random_grid(mesh, {-5, 2, 9, 11}, 3);
    const auto out = convolve(delta, g);
    EXPECT_EQ(out.box(), g.box());
    EXPECT_LE(max_abs_diff(out, g), 1e-13);
}

TEST(Convolve, ZeroInputGivesZero) {
    const auto a = random_grid(2, {0, 0, 8, 8}, 4);
    GridFunction z(2, {0, 0, 4, 4});
    EXPECT_TRUE(convolve(a, z).linf() < 1e-300 + 0.0 || convolve(a, z).is_zero());
    EXPECT_TRUE(convolve(a, GridFunction(2, {})).empty());
}

TEST(Convolve, MeshMismatchThrows) {
    EXPECT_THROW(convolve(random_grid(2, {0, 0, 2, 2}, 1), random_grid(3, {0, 0, 2, 2}, 1)), std::invalid_argument);
}

TEST(KernelConvolver, ReusesSpectrum) {
    const auto k = random_grid(4, {-8, -8, 9, 9}, 5);
    KernelConvolver kc(k);
    for (std::uint64_t s = 1; s <= 3; ++s) {
        const auto g = random_grid(4, LatticeBox::from_extent({static_cast<Coord>(s) * 3, -2}, {20, 20}), s);
        EXPECT_LE(max_abs_diff(kc(g), convolve_direct(k, g)), 1e-10 * convolve_direct(k, g).linf());
    }
}

TEST(Multiplier, IdentitySymbolReturnsInput) {
    const auto g = random_grid(4, {0, 0, 10, 6}, 8);
    const auto out = apply_multiplier(g, [](double, double) { return 1.0; });
    EXPECT_TRUE(out.box().contains(g.box()));
    EXPECT_LE(max_abs_diff(out, g), 1e-13);
}
