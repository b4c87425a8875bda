// Seeded invariant checks shared by `verify` and the acceptance suite. Each
// returns a Report whose check names say which invariant is measured.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "rsi/czd.hpp"
#include "rsi/fft.hpp"
#include "rsi/kernel.hpp"
#include "rsi/lab/suites.hpp"
#include "rsi/layering.hpp"
#include "rsi/microlocal.hpp"
#include "rsi/operator.hpp"

namespace rsi::lab {

/// Merges r into acc keeping, per name, a failing entry or else the one
/// closest to its threshold.
inline void fold_worst(Report& acc, const Report& r) {
    for (const Check& c : r.checks) {
        auto it = std::find_if(acc.checks.begin(), acc.checks.end(), [&](const Check& a) { return a.name == c.name; });
        if (it == acc.checks.end()) {
            acc.checks.push_back(c);
            continue;
        }
        if (!it->pass) continue;
        if (!c.pass || std::abs(c.measured - c.threshold) < std::abs(it->measured - it->threshold)) *it = c;
    }
}

inline Report check_partition_of_unity(std::uint64_t seed, int samples = 10000) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> logr(-6.0, 2.0), ang(0.0, 2.0 * std::numbers::pi);
    double worst = 0.0;
    for (int t = 0; t < samples; ++t) {
        double r = std::exp2(logr(rng));
        if (r <= std::exp2(-6.0)) r = std::nextafter(std::exp2(-6.0), 1.0);
        const double a = ang(rng), x = r * std::cos(a), y = r * std::sin(a);
        double sum = 0.0;
        for (int j = -4; j <= 6; ++j) sum += phi(std::ldexp(x, -j), std::ldexp(y, -j));
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    Report rep;
    rep.at_most("partition_of_unity_defect", worst, 1e-12);
    return rep;
}

/// Every cell of [-side/2, side/2)^2 (side = 2^{k+mesh} cells, one full period
/// of the shifted grids) lies in exactly one 1/2 K over the four shifted grids,
/// by the library count and by residues.
inline Report check_cover_identity(int mesh, const std::vector<int>& levels) {
    int defects = 0;
    Coord cells = 0;
    for (int k : levels) {
        const Coord side = Coord{1} << (k + mesh), u = side / 2;  // u = half the cube side
        const auto in_half = [&](Coord p, int wi) {
            const Coord t = p - wi * u - u / 2;
            const Coord r = ((t % (2 * u)) + 2 * u) % (2 * u);
            return r < u;
        };
        for (Coord y = -u; y < u; ++y)
            for (Coord x = -u; x < u; ++x) {
                int n = 0;
                for (const Shift& w : kAllShifts) n += in_half(x, w.wx) && in_half(y, w.wy);
                if (n != 1 || cover_count(Index2{x, y}, k, mesh) != 1) ++defects;
                ++cells;
            }
    }
    Report r;
    r.at_most("cover_count_defects", defects, 0.0);
    r.above("cells_checked", static_cast<double>(cells), 0.0);
    return r;
}

/// CZ contract on `count` seeded blob fields over the unit square.
inline Report check_cz(int mesh, std::uint64_t seed, int count = 20) {
    Report acc;
    int selected = 0;
    for (int i = 0; i < count; ++i) {
        const GridFunction f = blob_field(mesh, Coord{1} << mesh, 30, seed + i);
        const double alpha = 0.05 * f.linf();
        const CZDecomposition dec = cz_decompose(f, alpha, default_root_level(f, alpha));
        selected += static_cast<int>(dec.bad.size());
        fold_worst(acc, verify_cz(dec, f));
    }
    acc.above("bad_cubes_selected", selected, 0.0);
    return acc;
}

/// T_K g vanishes outside K: the library output and a direct sum at seeded
/// points outside K, for `trials` random (K, g) per level.
inline Report check_support(const SphereFunction& omega, int mesh, const std::vector<int>& levels, std::uint64_t seed,
                            int trials = 100, int ring_points = 32) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> mpos(-4, 4);
    KernelBank bank(omega, mesh);
    const double h = mesh_size(mesh);
    double outside = 0.0, direct = 0.0;
    int nonzero_inside = 0;
    for (int k : levels) {
        const Coord R = kernel_radius(k, mesh);
        const double scale = std::ldexp(1.0, -k);
        for (int t = 0; t < trials; ++t) {
            const DyadicCube K{kAllShifts[rng() % 4], k, mpos(rng), mpos(rng)};
            const LatticeBox kb = K.lattice_box(mesh);
            GridFunction g(mesh, kb.dilated(kb.width() / 4));
            for (double& v : g.samples()) v = u(rng);
            const GridFunction T = apply_TK(bank.at(k), K, g);
            T.for_each([&](Coord x, Coord y, double v) {
                if (!kb.contains(x, y)) outside = std::max(outside, std::abs(v));
            });
            if (!T.is_zero()) ++nonzero_inside;
            const LatticeBox hb = K.half_lattice_box(mesh), reach = kb.dilated(R);
            std::uniform_int_distribution<Coord> px(reach.x0, reach.x1 - 1), py(reach.y0, reach.y1 - 1);
            for (int p = 0; p < ring_points;) {
                const Coord x = px(rng), y = py(rng);
                if (kb.contains(x, y)) continue;
                ++p;
                double s = 0.0;
                for (Coord yy = hb.y0; yy < hb.y1; ++yy)
                    for (Coord xx = hb.x0; xx < hb.x1; ++xx) {
                        const double dx = static_cast<double>(x - xx), dy = static_cast<double>(y - yy);
                        const double r = std::hypot(dx, dy) * h;
                        const double ph = phi_radial(r * scale);
                        if (ph != 0.0) s += ph * omega.at_direction(dx, dy) / (r * r) * g.at(xx, yy);
                    }
                direct = std::max(direct, std::abs(s * h * h));
            }
        }
    }
    Report r;
    r.at_most("TK_outside_K", outside, 0.0);
    r.at_most("direct_sum_outside_K", direct, 0.0);
    const bool zero_kernel = l1_norm(omega) == 0.0;
    r.add("TK_nonzero_instances", nonzero_inside, 0.0, zero_kernel || nonzero_inside > 0);
    return r;
}

/// T_k g against sum over shifts and level-k cubes of T_K g.
inline Report check_localization_identity(const SphereFunction& omega, int mesh, const std::vector<int>& levels,
                                          std::uint64_t seed) {
    KernelBank bank(omega, mesh);
    const GridFunction g = blob_field(mesh, Coord{1} << (mesh - 1), 20, seed);
    double worst = 0.0, worst_thr = 0.0;
    bool pass = true;
    for (int k : levels) {
        const GridFunction direct = bank.apply(k, g);
        const GridFunction pieces = sum_TK(bank.at(k), k, g);
        const double d = max_abs_diff(direct, pieces), thr = 1e-10 * direct.linf();
        if (!(d <= thr)) pass = false;
        if (worst_thr == 0.0 || d / std::max(thr, 1e-300) > worst / std::max(worst_thr, 1e-300)) {
            worst = d;
            worst_thr = thr;
        }
    }
    Report r;
    r.add("identity_residual", worst, worst_thr, pass);
    return r;
}

/// FFT convolution against the direct sum on 32 x 32 inputs.
inline Report check_convolution(std::uint64_t seed, int trials = 5) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<Coord> off(-20, 20);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        GridFunction a(5, LatticeBox::from_extent({off(rng), off(rng)}, {32, 32}));
        GridFunction b(5, LatticeBox::from_extent({off(rng), off(rng)}, {32, 32}));
        for (double& v : a.samples()) v = u(rng);
        for (double& v : b.samples()) v = u(rng);
        const GridFunction fast = convolve(a, b), slow = convolve_direct(a, b);
        worst = std::max(worst, max_abs_diff(fast, slow) / slow.linf());
    }
    Report r;
    r.at_most("convolution_relative_error", worst, 1e-10);
    return r;
}

/// Net invariants and exact slice reassembly of K_j for each s.
inline Report check_direction_nets(const SphereFunction& omega, int mesh, int j, const std::vector<int>& s_values,
                                   double gamma) {
    Report acc;
    const GridFunction full = build_kernel(j, omega, mesh);
    for (int s : s_values) {
        DirectionNet net;
        try {
            net = build_direction_net(s, gamma, omega.arc_count());
        } catch (const std::exception&) {
            acc.add("net_construction_s" + std::to_string(s), 1.0, 0.0, false);
            continue;
        }
        fold_worst(acc, check_net(net));
        GridFunction sum(mesh, full.box());
        for (int v = 0; v < net.size(); ++v) sum += build_kernel_slice(j, omega, mesh, net.sector_of_arc, v);
        fold_worst(acc, [&] {
            Report r;
            r.at_most("slice_sum_residual", max_abs_diff(sum, full), 0.0);
            return r;
        }());
    }
    return acc;
}

/// Plateaus of side 1..16 cells in the unit square with masses spread over
/// three decades (+-10^{3u} 2^{-12}).
inline GridFunction plateau_field(int mesh, std::uint64_t seed, int count = 40) {
    std::mt19937_64 rng(seed);
    const Coord n = Coord{1} << mesh;
    std::uniform_int_distribution<Coord> pos(0, n - 17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GridFunction g(mesh, {0, 0, n, n});
    const double unit = std::exp2(-12.0) / g.cell_area();
    for (int i = 0; i < count; ++i) {
        const Coord x = pos(rng), y = pos(rng), r = Coord{1} << (rng() % 5);
        const double a = (u(rng) < 0.5 ? -1.0 : 1.0) * std::pow(10.0, 3.0 * u(rng)) * unit / static_cast<double>(r * r);
        for (Coord yy = y; yy < y + r; ++yy)
            for (Coord xx = x; xx < x + r; ++xx) g.ref(xx, yy) += a;
    }
    return g;
}

/// Packing chain link by link on `boxes` seeded lattice boxes.
inline Report check_packing(int mesh, LevelRange levels, int s, double alpha, std::uint64_t seed, int boxes = 50) {
    const GridFunction f = plateau_field(mesh, seed);
    const CZDecomposition dec = cz_decompose(f, alpha, default_root_level(f, alpha));
    const std::vector<ActiveCube> act = active_cubes(dec, s, kStandardShift, levels);
    Report acc;
    acc.above("active_cubes", static_cast<double>(act.size()), 0.0);
    fold_worst(acc, check_witness_geometry(act, mesh));
    std::mt19937_64 rng(seed + 1);
    const Coord n = Coord{1} << mesh;
    std::uniform_int_distribution<Coord> pos(-n / 4, n + n / 4);
    int nonvacuous = 0;
    for (int t = 0; t < boxes; ++t) {
        Coord x0 = pos(rng), x1 = pos(rng), y0 = pos(rng), y1 = pos(rng);
        if (x0 > x1) std::swap(x0, x1);
        if (y0 > y1) std::swap(y0, y1);
        const LatticeBox A{x0, y0, x1 + 1, y1 + 1};
        const Report r = packing_chain(act, dec, s, A, f.l1());
        if (r.checks.front().measured > 0.0) ++nonvacuous;
        fold_worst(acc, r);
    }
    acc.above("boxes_with_active_cubes", nonvacuous, 0.0);
    return acc;
}

struct DecayStats {
    double worst_ratio = 0.0;  // max |F^n| / |F^{n-1}|
    int links = 0;
    int layer_bound_violations = 0;
    int coverage_defects = 0;
};

/// F-level chain and partitions of one tower field.
inline DecayStats f_decay_stats(const GridFunction& f, LevelRange levels, int s, double c0) {
    DecayStats st;
    const CZDecomposition dec = cz_decompose(f, 1.0, default_root_level(f, 1.0));
    const CubeLayering L = build_layering(dec, s, kStandardShift, levels, c0);
    const int mesh = f.mesh_exp();
    for (std::size_t n = 1; n < L.F.size(); ++n) {
        const double prev = L.F[n - 1].measure(mesh), cur = L.F[n].measure(mesh);
        st.worst_ratio = std::max(st.worst_ratio, prev > 0.0 ? cur / prev : 0.0);
        ++st.links;
    }
    std::size_t covered = 0;
    for (const auto& p : L.partitions) covered += p.size();
    st.coverage_defects = static_cast<int>(covered != L.active.size());
    const double u0 = overlap_threshold(c0, s);
    const bool terminated = L.F.size() < 64u;
    for (std::size_t n = 0; n < L.layers.size(); ++n) {
        if (!terminated && n + 1 == L.layers.size()) continue;
        if (static_cast<double>(L.layers[n].size()) > u0 + 1.0) ++st.layer_bound_violations;
    }
    return st;
}

/// |F^n| <= |F^{n-1}| / 4 and the layer bound on `count` tower fields.
inline Report check_f_decay(int mesh, LevelRange levels, int s, double c0, std::uint64_t seed, int count = 10) {
    double worst = 0.0;
    int links = 0, layer_bad = 0, cover_bad = 0;
    for (int i = 0; i < count; ++i) {
        const DecayStats st = f_decay_stats(tower_field(mesh, levels.lo, levels.hi, s, seed + i), levels, s, c0);
        worst = std::max(worst, st.worst_ratio);
        links += st.links;
        layer_bad += st.layer_bound_violations;
        cover_bad += st.coverage_defects;
    }
    Report r;
    r.at_most("F_measure_ratio", worst, 0.25);
    r.above("F_links_checked", links, 0.0);
    r.at_most("layer_bound_violations", layer_bad, 0.0);
    r.at_most("partition_coverage_defects", cover_bad, 0.0);
    return r;
}

/// linearized_sup against truncation_sup on every partition of `count` tower fields.
inline Report check_linearization(const SphereFunction& omega, int mesh, LevelRange levels, int s, double c0,
                                  std::uint64_t seed, int count = 20) {
    KernelBank bank(omega, mesh);
    double worst = 0.0;
    int multi_layer = 0;
    for (int i = 0; i < count; ++i) {
        const GridFunction f = tower_field(mesh, levels.lo, levels.hi, s, seed + i);
        const CZDecomposition dec = cz_decompose(f, 1.0, default_root_level(f, 1.0));
        const CubeLayering L = build_layering(dec, s, kStandardShift, levels, c0);
        CubeOperator op(dec, s, bank);
        for (std::size_t n = 0; n < L.partitions.size(); ++n) {
            const auto beta = layer_sums(L.layers[n], op, mesh);
            const GridFunction lin = linearized_sup(L.partitions[n], L.layers[n], beta, mesh);
            worst = std::max(worst, max_abs_diff(lin, truncation_sup(L.partitions[n], op, mesh)));
            if (L.layers[n].size() > 1) ++multi_layer;
        }
    }
    Report r;
    r.at_most("linearization_residual", worst, 0.0);
    r.above("multi_layer_partitions", multi_layer, 0.0);
    return r;
}

/// Rademacher-Menshov ratio on `count` seeded families of N = 1..10 mean-zero
/// functions with correlated components and amplitudes over two decades.
inline Report check_rademacher_menshov(std::uint64_t seed, int count = 20) {
    double worst = 0.0;
    int exhaustive = 0;
    for (int t = 0; t < count; ++t) {
        std::mt19937_64 rng(seed + t);
        std::normal_distribution<double> nd;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const int N = 1 + t % 10;
        GridFunction common(4, {0, 0, 16, 16});
        for (double& v : common.samples()) v = nd(rng);
        std::vector<GridFunction> fs;
        for (int i = 0; i < N; ++i) {
            GridFunction g(4, {0, 0, 16, 16});
            const double c = 2.0 * u(rng), amp = std::pow(10.0, 2.0 * u(rng) - 1.0);
            double mean = 0.0;
            for (std::size_t k = 0; k < g.samples().size(); ++k)
                mean += (g.samples()[k] = amp * (nd(rng) + c * common.samples()[k]));
            mean /= static_cast<double>(g.samples().size());
            for (double& v : g.samples()) v -= mean;
            fs.push_back(std::move(g));
        }
        const RmReport rm = rm_check(fs, 10, seed + t);
        exhaustive += rm.exhaustive;
        worst = std::max(worst, rm.ratio);
    }
    Report r;
    r.at_most("rm_ratio", worst, 1.0);
    r.add("rm_exhaustive_families", exhaustive, count, exhaustive == count);
    return r;
}

/// Geometry of the pointwise-control suite: support side 2^{hi-4}, so every
/// pair distance stays below the outer truncation 2^{hi-3}.
struct PointwiseSuite {
    int mesh = 7;
    LevelRange levels{0, 3};
};

struct PointwiseRatios {
    double upper = 0.0;  // max T_{Omega,*} f / (M_Omega f + T_* f)
    double lower = 0.0;  // max T_* f / (M_Omega f + T_{Omega,*} f)
};

inline GridFunction pointwise_input(const PointwiseSuite& ps, std::uint64_t seed) {
    const Coord n = Coord{1} << (ps.levels.hi - 4 + ps.mesh);
    if (seed % 2 == 0) return blob_field(ps.mesh, n, 12, seed);
    return spike_train(ps.mesh, n, 6, 0.1, 10.0, seed);
}

/// Truncations eps = 2^{l-3} and M_Omega radii 2^{l-2} for l in the level range;
/// ratios on the support box of f, zero denominators skipped.
inline PointwiseRatios pointwise_ratios(const SphereFunction& omega, const GridFunction& f, LevelRange lv) {
    std::vector<double> eps, radii;
    for (int l = lv.lo; l <= lv.hi; ++l) {
        eps.push_back(std::exp2(l - 3));
        radii.push_back(std::exp2(l - 2));
    }
    const LatticeBox eval = f.support_box();
    PointwiseRatios pr;
    if (eval.empty()) return pr;
    const GridFunction direct = maximal_truncated_direct(omega, f, eps, eval);
    const GridFunction mo = m_omega(omega, f, radii, eval);
    const GridFunction dyadic = maximal_dyadic(omega, f, lv);
    for (Coord y = eval.y0; y < eval.y1; ++y)
        for (Coord x = eval.x0; x < eval.x1; ++x) {
            const double a = direct.at(x, y), m = mo.at(x, y), t = dyadic.at(x, y);
            if (m + t > 0.0) pr.upper = std::max(pr.upper, a / (m + t));
            if (m + a > 0.0) pr.lower = std::max(pr.lower, t / (m + a));
        }
    return pr;
}

inline PointwiseRatios pointwise_suite_ratios(const SphereFunction& omega, std::uint64_t seed, int count = 20,
                                              PointwiseSuite ps = {}) {
    PointwiseRatios acc;
    for (int i = 0; i < count; ++i) {
        const PointwiseRatios r = pointwise_ratios(omega, pointwise_input(ps, seed + i), ps.levels);
        acc.upper = std::max(acc.upper, r.upper);
        acc.lower = std::max(acc.lower, r.lower);
    }
    return acc;
}

inline Report check_pointwise_control(const SphereFunction& omega, double C, std::uint64_t seed, int count = 20) {
    const PointwiseRatios r = pointwise_suite_ratios(omega, seed, count);
    Report rep;
    rep.at_most("pointwise_upper_ratio", r.upper, C);
    rep.at_most("pointwise_lower_ratio", r.lower, C);
    return rep;
}

}  // namespace rsi::lab
