#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "rsi/microlocal.hpp"
#include "rsi/operator.hpp"

using namespace rsi;

namespace {

GridFunction random_grid(int mesh, LatticeBox box, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GridFunction g(mesh, box);
    for (double& v : g.samples()) v = u(rng);
    return g;
}

// Mean-zero atom on a cube of side 2^level: +1 on the left half, -1 on the right.
GridFunction dipole(int mesh, int level) {
    const Coord n = Coord{1} << (level + mesh);
    GridFunction g(mesh, {0, 0, n, n});
    g.for_each_mut([&](Coord x, Coord, double& v) { v = 2 * x < n ? 1.0 : -1.0; });
    return g;
}

}  // namespace

TEST(Microlocal, NetInvariantsAcrossScales) {
    for (int s : {4, 8, 12}) {
        const DirectionNet net = build_direction_net(s, 0.25, 1024);
        const Report r = check_net(net);
        for (const Check& c : r.checks) EXPECT_TRUE(c.pass) << "s=" << s << ' ' << c.name << '=' << c.measured;
    }
}

TEST(Microlocal, CoarsestNetIsValid) {
    const DirectionNet net = build_direction_net(1, 0.01, 128);
    EXPECT_GT(net.size(), 1);
    EXPECT_TRUE(check_net(net).all_pass());
}

TEST(Microlocal, PackingCountSandwich) {
    const DirectionNet net = build_direction_net(8, 0.5, 4096);
    const double rho = std::exp2(-8 * 0.5 - 4);
    EXPECT_GE(net.size(), 2.0 * std::numbers::pi / (2.0 * rho) * (1.0 - 1e-3));
    EXPECT_LE(net.size(), 2.0 * std::numbers::pi / rho);
}

TEST(Microlocal, SectorDiameterBruteForce) {
    const DirectionNet net = build_direction_net(8, 0.25, 1024);
    const double w = net.arc_width();
    for (int v = 0; v < net.size(); ++v) {
        double d = 0.0;
        for (int a : net.arcs_of(v))
            for (int b : net.arcs_of(v))
                for (double ta : {a * w, (a + 1) * w})
                    for (double tb : {b * w, (b + 1) * w})
                        d = std::max(d, std::hypot(std::cos(ta) - std::cos(tb), std::sin(ta) - std::sin(tb)));
        EXPECT_LE(d, 4.0 * net.rho * (1.0 + 1e-12)) << v;
    }
}

TEST(Microlocal, SeparationAndCoveringBruteForce) {
    const DirectionNet net = build_direction_net(6, 0.25, 1024);
    for (int a = 0; a < net.size(); ++a)
        for (int b = a + 1; b < net.size(); ++b) {
            const double d = std::hypot(std::cos(net.angles[a]) - std::cos(net.angles[b]),
                                        std::sin(net.angles[a]) - std::sin(net.angles[b]));
            EXPECT_GE(d, net.rho);
        }
    for (int a = 0; a < net.arc_count; ++a) {
        const double t = (a + 0.5) * net.arc_width();
        double best = 10.0;
        for (double c : net.angles) best = std::min(best, std::hypot(std::cos(t) - std::cos(c), std::sin(t) - std::sin(c)));
        EXPECT_LE(best, net.rho * (1.0 + 1e-12));
    }
}

TEST(Microlocal, UnresolvableArcGrid) {
    try {
        build_direction_net(12, 0.25, 64);
        FAIL() << "expected an error";
    } catch (const std::invalid_argument& e) {
        EXPECT_STREQ(e.what(), "increase arc_count for this (s,gamma)");
    }
    EXPECT_THROW(build_direction_net(0, 0.25, 1024), std::invalid_argument);
    EXPECT_THROW(build_direction_net(4, 1.0, 1024), std::invalid_argument);
}

TEST(Microlocal, SlicesSumToKernelExactly) {
    const auto om = project_cancellation(SphereFunction::random(1024, 5));
    for (int s : {4, 8, 12}) {
        const DirectionNet net = build_direction_net(s, 0.25, 1024);
        const GridFunction full = build_kernel(1, om, 6);
        GridFunction sum(6, full.box());
        for (int v = 0; v < net.size(); ++v) sum += build_kernel_slice(1, om, 6, net.sector_of_arc, v);
        EXPECT_EQ(max_abs_diff(sum, full), 0.0) << "s=" << s;
    }
}

TEST(Microlocal, SliceOperatorsSumToTj) {
    const auto om = SphereFunction::cosine(1024);
    const DirectionNet net = build_direction_net(4, 0.25, 1024);
    const auto f = random_grid(6, {0, 0, 12, 12}, 2);
    GridFunction sum(6, {});
    for (int v = 0; v < net.size(); ++v) sum += convolve(build_kernel_slice(1, om, 6, net.sector_of_arc, v), f);
    const GridFunction full = apply_Tj(1, om, f);
    EXPECT_LE(max_abs_diff(sum, full), 1e-10 * full.linf());
}

TEST(Microlocal, SymbolValues) {
    const DirectionNet net = build_direction_net(4, 0.25, 1024);
    EXPECT_EQ(g_symbol(net, 0, 0.0, 0.0), 1.0);
    EXPECT_EQ(cone_cutoff(0.0), 1.0);
    EXPECT_EQ(cone_cutoff(2.0), 1.0);
    EXPECT_EQ(cone_cutoff(-4.0), 0.0);
    EXPECT_EQ(cone_cutoff(5.0), 0.0);
    EXPECT_GT(cone_cutoff(3.0), 0.0);
    EXPECT_LT(cone_cutoff(3.0), 1.0);
}

TEST(Microlocal, WideConeIsIdentity) {
    // 2^{s gamma} <= 2 keeps the cone argument inside [-2, 2] everywhere.
    const DirectionNet net = build_direction_net(2, 0.5, 1024);
    ASSERT_LE(net.scale(), 2.0);
    const auto g = random_grid(5, {-8, -8, 8, 8}, 3);
    const GridFunction out = apply_G(net, 0, g);
    EXPECT_LE(max_abs_diff(out, g), 1e-12);
    EXPECT_LE(apply_I_minus_G(net, 0, g).linf(), 1e-12);
}

TEST(Microlocal, ZeroInput) {
    const DirectionNet net = build_direction_net(6, 0.25, 1024);
    EXPECT_TRUE(apply_G(net, 1, GridFunction(5, {0, 0, 8, 8})).is_zero());
}

TEST(Microlocal, ParsevalBound) {
    const DirectionNet net = build_direction_net(10, 0.25, 1024);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto g = random_grid(5, {-16, -10, 16, 10}, seed);
        for (int v : {0, net.size() / 3, net.size() - 1}) {
            const GridFunction gg = apply_G(net, v, g);
            EXPECT_LE(gg.l2(), g.l2() * (1.0 + 1e-10));
            const GridFunction cg = apply_I_minus_G(net, v, g);
            EXPECT_LE(cg.l2(), g.l2() + gg.l2());
            EXPECT_LE(max_abs_diff(gg + cg, g), 1e-14);
        }
    }
}

TEST(Microlocal, ComplementAnnihilatesConeSpectrum) {
    // A function of x1 alone has spectrum on the xi1 axis, orthogonal to e_v = (0, 1).
    const DirectionNet net = build_direction_net(6, 0.25, 1024);
    int v = 0;
    for (int u = 0; u < net.size(); ++u)
        if (std::abs(net.angles[u] - std::numbers::pi / 2) < std::abs(net.angles[v] - std::numbers::pi / 2)) v = u;
    ASSERT_LE(std::abs(std::cos(net.angles[v])) * net.scale(), 2.0 * 0.5);
    GridFunction g(5, {0, 0, 32, 32});
    g.for_each_mut([](Coord x, Coord, double& val) { val = std::sin(2 * std::numbers::pi * 3 * x / 32.0) + 0.5; });
    const GridFunction out = apply_multiplier(g, [&](double a, double b) { return g_symbol(net, v, a, b); }, 1);
    EXPECT_LE(max_abs_diff(out, g), 1e-12);
}

TEST(Microlocal, SectorRemainderMatchesPerSectorSum) {
    const auto om = project_cancellation(SphereFunction::random(1024, 9));
    const DirectionNet net = build_direction_net(6, 0.25, 1024);
    const int mesh = 6, j = 1;
    const auto b = dipole(mesh, -3);
    const GridFunction fast = sector_remainder(net, om, j, b);
    GridFunction slow(mesh, {});
    for (int v = 0; v < net.size(); ++v)
        slow += apply_I_minus_G(net, v, convolve(build_kernel_slice(j, om, mesh, net.sector_of_arc, v), b));
    ASSERT_GT(slow.linf(), 1e-6);
    EXPECT_LE(max_abs_diff(fast, slow), 1e-10 * slow.linf());
}

TEST(Microlocal, FrequencyLocalizationTrend) {
    // max over sampled sectors of ||G_v T_j^v delta||_2 / ||T_j^v delta||_2
    const auto om = SphereFunction::cosine(1024);
    const int mesh = 7, j = 2;
    std::vector<double> ratio;
    for (int s : {4, 6, 8, 10}) {
        const DirectionNet net = build_direction_net(s, 0.25, 1024);
        double worst = 0.0;
        for (int v = 0; v < net.size(); v += std::max(1, net.size() / 8)) {
            const GridFunction k = build_kernel_slice(j, om, mesh, net.sector_of_arc, v);
            if (k.is_zero()) continue;
            worst = std::max(worst, apply_G(net, v, k).l2() / k.l2());
        }
        ratio.push_back(worst);
    }
    for (std::size_t i = 1; i < ratio.size(); ++i) EXPECT_LT(ratio[i], ratio[i - 1]) << i;
}

TEST(Microlocal, RemainderVanishesForWideCone) {
    // 2^{s gamma} = 2 at s = 4, gamma = 1/4: G_v = I and the remainder is exactly 0.
    const auto om = project_cancellation(SphereFunction::random(1024, 4));
    const auto b = dipole(7, -4);
    EXPECT_TRUE(sector_remainder(build_direction_net(4, 0.25, 1024), om, 0, b).is_zero());
    EXPECT_FALSE(sector_remainder(build_direction_net(6, 0.25, 1024), om, 0, b).is_zero());
}

TEST(Microlocal, NetCsv) {
    const DirectionNet net = build_direction_net(4, 0.25, 1024);
    std::ostringstream os;
    write_net_csv(os, net);
    const std::string text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "v,angle,sep_left,sector_width");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), net.size() + 1);
}
