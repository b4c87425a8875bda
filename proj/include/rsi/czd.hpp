// Stopping-time Calderon-Zygmund decomposition on the standard dyadic grid.
#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rsi/dyadic.hpp"
#include "rsi/grid.hpp"
#include "rsi/report.hpp"

namespace rsi {

struct BadCube {
    DyadicCube cube;
    double avg_abs = 0.0;  // <|f|>_Q
    GridFunction b;        // (f - mean_Q f) chi_Q on Q's cells
};

struct CZDecomposition {
    double alpha = 0.0;
    int root_level = 0;
    GridFunction good;
    std::vector<BadCube> bad;

    /// b_level = sum of b_Q over bad cubes of the given level.
    GridFunction bad_at_level(int level) const {
        return sum_bad([&](const BadCube& q) { return q.cube.level == level; });
    }

    GridFunction bad_total() const {
        return sum_bad([](const BadCube&) { return true; });
    }

    LevelRange bad_levels() const {
        if (bad.empty()) return {0, -1};
        LevelRange r{bad.front().cube.level, bad.front().cube.level};
        for (const BadCube& q : bad) {
            r.lo = std::min(r.lo, q.cube.level);
            r.hi = std::max(r.hi, q.cube.level);
        }
        return r;
    }

private:
    template <class Pred>
    GridFunction sum_bad(Pred keep) const {
        LatticeBox box{};
        for (const BadCube& q : bad)
            if (keep(q)) box = box.unite(q.b.box());
        GridFunction s(good.mesh_exp(), box);
        for (const BadCube& q : bad)
            if (keep(q)) s += q.b;
        return s;
    }
};

namespace detail {

inline Coord floor_div(Coord a, Coord b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

/// (|f|, f) sums over the cubes of side 2^d cells meeting a box, stored densely.
struct SumLevel {
    int d = 0;
    Coord x0 = 0, y0 = 0, nx = 0, ny = 0;
    std::vector<double> abs_sum, sum;

    std::size_t at(Coord x, Coord y) const { return static_cast<std::size_t>((y - y0) * nx + (x - x0)); }
    bool holds(Coord x, Coord y) const { return x >= x0 && y >= y0 && x < x0 + nx && y < y0 + ny; }
    double max_average() const {
        double m = 0.0;
        for (double v : abs_sum) m = std::max(m, v);
        return m / std::ldexp(1.0, 2 * d);
    }
};

inline SumLevel base_level(const GridFunction& f, const LatticeBox& supp) {
    SumLevel L;
    L.x0 = supp.x0;
    L.y0 = supp.y0;
    L.nx = supp.width();
    L.ny = supp.height();
    L.abs_sum.assign(static_cast<std::size_t>(L.nx * L.ny), 0.0);
    L.sum.assign(L.abs_sum.size(), 0.0);
    f.for_each([&](Coord x, Coord y, double v) {
        if (v == 0.0 || !L.holds(x, y)) return;
        L.abs_sum[L.at(x, y)] = std::abs(v);
        L.sum[L.at(x, y)] = v;
    });
    return L;
}

/// Parents are floating sums of their children, so child <= parent.
inline SumLevel coarsen(const SumLevel& C) {
    SumLevel L;
    L.d = C.d + 1;
    L.x0 = floor_div(C.x0, 2);
    L.y0 = floor_div(C.y0, 2);
    L.nx = floor_div(C.x0 + C.nx - 1, 2) - L.x0 + 1;
    L.ny = floor_div(C.y0 + C.ny - 1, 2) - L.y0 + 1;
    L.abs_sum.assign(static_cast<std::size_t>(L.nx * L.ny), 0.0);
    L.sum.assign(L.abs_sum.size(), 0.0);
    for (Coord cy = C.y0; cy < C.y0 + C.ny; ++cy)
        for (Coord cx = C.x0; cx < C.x0 + C.nx; ++cx) {
            const std::size_t ci = C.at(cx, cy), pi = L.at(floor_div(cx, 2), floor_div(cy, 2));
            L.abs_sum[pi] += C.abs_sum[ci];
            L.sum[pi] += C.sum[ci];
        }
    return L;
}

}  // namespace detail

/// Smallest level whose cubes covering supp f all have <|f|>_Q <= alpha.
inline int default_root_level(const GridFunction& f, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    const LatticeBox supp = f.support_box();
    if (supp.empty()) return -f.mesh_exp();
    detail::SumLevel L = detail::base_level(f, supp);
    for (int k = -f.mesh_exp(); k < 62 - f.mesh_exp(); ++k, L = detail::coarsen(L))
        if (L.max_average() <= alpha) return k;
    throw std::runtime_error("no admissible root level");
}

/// Selects the maximal standard dyadic Q below root_level with <|f|>_Q > alpha.
inline CZDecomposition cz_decompose(const GridFunction& f, double alpha, int root_level) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    const int mesh = f.mesh_exp();
    if (root_level < -mesh) throw std::invalid_argument("root level below the mesh");
    CZDecomposition dec;
    dec.alpha = alpha;
    dec.root_level = root_level;
    const LatticeBox supp = f.support_box();
    if (supp.empty()) {
        dec.good = GridFunction(mesh, {});
        return dec;
    }
    const int depth = root_level + mesh;  // root side = 2^depth cells

    std::vector<detail::SumLevel> lv{detail::base_level(f, supp)};
    for (int d = 1; d <= depth; ++d) lv.push_back(detail::coarsen(lv.back()));

    struct Node {
        int d;
        Coord x, y;
    };
    std::vector<Node> stack;
    {
        const detail::SumLevel& T = lv[static_cast<std::size_t>(depth)];
        for (Coord x = T.x0 + T.nx; x-- > T.x0;)
            for (Coord y = T.y0 + T.ny; y-- > T.y0;) stack.push_back({depth, x, y});
    }
    LatticeBox gbox = f.box();
    std::vector<std::pair<DyadicCube, double>> means;
    while (!stack.empty()) {
        const Node n = stack.back();
        stack.pop_back();
        const detail::SumLevel& L = lv[static_cast<std::size_t>(n.d)];
        if (!L.holds(n.x, n.y)) continue;
        const std::size_t i = L.at(n.x, n.y);
        if (L.abs_sum[i] == 0.0) continue;
        const double cells = std::ldexp(1.0, 2 * n.d);
        const double avg = L.abs_sum[i] / cells;
        if (avg > alpha) {
            if (n.d == depth) throw std::invalid_argument("root level too fine, enlarge root_level");
            const double mean = L.sum[i] / cells;
            const DyadicCube Q{kStandardShift, n.d - mesh, n.x, n.y};
            BadCube bq{Q, avg, GridFunction(mesh, Q.lattice_box(mesh))};
            bq.b.for_each_mut([&](Coord x, Coord y, double& v) { v = f.at(x, y) - mean; });
            gbox = gbox.unite(bq.b.box());
            means.push_back({Q, mean});
            dec.bad.push_back(std::move(bq));
            continue;
        }
        if (n.d == 0) continue;
        for (int q = 3; q >= 0; --q) stack.push_back({n.d - 1, 2 * n.x + (q & 1), 2 * n.y + (q >> 1)});
    }
    std::sort(dec.bad.begin(), dec.bad.end(), [](const BadCube& a, const BadCube& b) { return a.cube < b.cube; });
    dec.good = f.reboxed(gbox);
    for (const auto& [Q, mean] : means) {
        const LatticeBox qb = Q.lattice_box(mesh);
        for (Coord y = qb.y0; y < qb.y1; ++y)
            for (Coord x = qb.x0; x < qb.x1; ++x) dec.good.ref(x, y) = mean;
    }
    return dec;
}

/// Re-measures the decomposition against its contract, recomputing every
/// average from f directly.
inline Report verify_cz(const CZDecomposition& dec, const GridFunction& f) {
    Report r;
    const double alpha = dec.alpha;
    const double fl1 = f.l1();
    const int mesh = f.mesh_exp();

    r.at_most("good_linf_over_alpha", dec.good.linf() / alpha, 4.0);

    double max_avg = 0.0, min_avg = dec.bad.empty() ? 0.0 : INFINITY, bad_l1 = 0.0, measure = 0.0, cancel = 0.0;
    int outside = 0;
    for (const BadCube& q : dec.bad) {
        const LatticeBox qb = q.cube.lattice_box(mesh);
        long double s = 0.0L;
        for (Coord y = qb.y0; y < qb.y1; ++y)
            for (Coord x = qb.x0; x < qb.x1; ++x) s += std::abs(f.at(x, y));
        const double avg = static_cast<double>(s / static_cast<long double>(qb.cells()));
        max_avg = std::max(max_avg, avg);
        min_avg = std::min(min_avg, avg);
        bad_l1 += q.b.l1();
        measure += q.cube.measure();
        const double bl1 = q.b.l1();
        if (bl1 > 0.0) cancel = std::max(cancel, std::abs(q.b.integral()) / bl1);
        if (!qb.contains(q.b.support_box())) ++outside;
    }
    if (dec.bad.empty()) min_avg = 2.0 * alpha;
    r.at_most("max_avg_over_alpha", max_avg / alpha, 4.0);
    r.above("min_avg_over_alpha", min_avg / alpha, 1.0);
    r.at_most("bad_l1_over_f_l1", fl1 > 0.0 ? bad_l1 / fl1 : 0.0, 2.0);
    r.at_most("bad_measure_alpha_over_f_l1", fl1 > 0.0 ? measure * alpha / fl1 : 0.0, 1.0);
    r.at_most("cancellation_residual", cancel, 1e-12);
    r.at_most("b_outside_cube", outside, 0.0);
    r.at_most("good_l1_minus_triangle", dec.good.l1() - (fl1 + bad_l1), 1e-12 * std::max(fl1, 1.0));

    // Pairwise disjointness on one grid: no selected cube contains another.
    std::set<DyadicCube> chosen;
    for (const BadCube& q : dec.bad) chosen.insert(q.cube);
    int overlaps_found = static_cast<int>(dec.bad.size() - chosen.size());
    for (const BadCube& q : dec.bad) {
        DyadicCube p = q.cube;
        for (int k = q.cube.level + 1; k <= dec.root_level; ++k) {
            p = p.parent();
            if (chosen.count(p)) ++overlaps_found;
        }
    }
    r.at_most("overlapping_pairs", overlaps_found, 0.0);

    GridFunction rebuilt = dec.good;
    for (const BadCube& q : dec.bad) rebuilt += q.b;
    const double scale = std::max(f.linf(), 1e-300);
    r.at_most("reconstruction_residual", max_abs_diff(rebuilt, f) / scale, 1e-12);
    return r;
}

/// `k,m1,m2,avg,bq_l1`
inline void write_bad_cubes_csv(std::ostream& os, const CZDecomposition& dec) {
    os << "k,m1,m2,avg,bq_l1\n";
    os.precision(17);
    for (const BadCube& q : dec.bad)
        os << q.cube.level << ',' << q.cube.m1 << ',' << q.cube.m2 << ',' << q.avg_abs << ',' << q.b.l1() << '\n';
}

}  // namespace rsi
