// Seeded test functions: spike trains, random blobs and their CZ bad parts,
// smooth bumps, and tower fields whose active cubes nest.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rsi/czd.hpp"
#include "rsi/grid.hpp"

namespace rsi::lab {

struct NamedInput {
    std::string name;
    GridFunction f;
};

/// `count` single-cell spikes at seeded positions in [0, n)^2 cells; masses
/// log-uniform in [mass_lo, mass_hi].
inline GridFunction spike_train(int mesh, Coord n, int count, double mass_lo, double mass_hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Coord> pos(0, n - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GridFunction g(mesh, {0, 0, n, n});
    const double inv_area = 1.0 / g.cell_area();
    for (int i = 0; i < count; ++i) {
        const Coord x = pos(rng), y = pos(rng);
        const double mass = mass_lo * std::pow(mass_hi / mass_lo, u(rng));
        g.ref(x, y) += mass * inv_area;
    }
    return g;
}

/// Sum of `count` signed square blobs in [0, n)^2 with sides up to n/16 cells.
inline GridFunction blob_field(int mesh, Coord n, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Coord rmax = std::max<Coord>(n / 32, 1);
    std::uniform_int_distribution<Coord> rad(1, rmax);
    GridFunction g(mesh, {0, 0, n, n});
    for (int i = 0; i < count; ++i) {
        const Coord r = rad(rng);
        std::uniform_int_distribution<Coord> pos(r, n - r);
        const Coord x = pos(rng), y = pos(rng);
        const double amp = 20.0 * u(rng) * static_cast<double>(rmax * rmax) / static_cast<double>(r * r);
        for (Coord yy = y - r; yy < y + r; ++yy)
            for (Coord xx = x - r; xx < x + r; ++xx) g.ref(xx, yy) += amp * (1.0 + 0.3 * u(rng));
    }
    return g;
}

/// sum of b_Q of the CZ decomposition of f at level alpha.
inline GridFunction cz_bad_part(const GridFunction& f, double alpha) {
    const CZDecomposition dec = cz_decompose(f, alpha, default_root_level(f, alpha));
    return dec.bad_total().reboxed(f.box());
}

/// exp(1 - 1 / (1 - rho^2)) on the disc inscribed in [0, n)^2, rho the relative radius.
inline GridFunction smooth_bump(int mesh, Coord n) {
    GridFunction g(mesh, {0, 0, n, n});
    const double c = 0.5 * static_cast<double>(n), R = 0.5 * static_cast<double>(n);
    g.for_each_mut([&](Coord x, Coord y, double& v) {
        const double dx = (x + 0.5 - c) / R, dy = (y + 0.5 - c) / R, r2 = dx * dx + dy * dy;
        v = r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
    });
    return g;
}

/// Bad cubes Q_q = corner + 2^{q+s-2}(1, 1) + [0, 2^q)^2 for q in [q0, q1], valued
/// 3 alpha on the left half and alpha on the right: average 2 alpha, b_Q != 0.
/// Q_q lies in the middle half of the level-(q+s) standard cube at `corner`,
/// so the active cubes of shift s nest over the corner.
inline void add_tower(GridFunction& g, Index2 corner, int q0, int q1, int s, double alpha) {
    const int mesh = g.mesh_exp();
    for (int q = q0; q <= q1; ++q) {
        const Coord n = Coord{1} << (q + mesh), off = Coord{1} << (q + s - 2 + mesh);
        for (Coord y = 0; y < n; ++y)
            for (Coord x = 0; x < n; ++x)
                g.ref(corner.x + off + x, corner.y + off + y) = (2 * x < n ? 3.0 : 1.0) * alpha;
    }
}

/// Tower stress field for CZ level 1: four slots of side 2^{k_hi} in a 2 x 2
/// arrangement, each holding one tower with seeded depth and corner, whose
/// active levels lie in [k_lo, k_hi]; plus +-0.05 noise. With `full_depth`
/// every tower spans the whole level range.
inline GridFunction tower_field(int mesh, int k_lo, int k_hi, int s, std::uint64_t seed, bool full_depth = false) {
    const Coord L = Coord{1} << (k_hi + mesh);
    GridFunction g(mesh, {0, 0, 2 * L, 2 * L});
    std::mt19937_64 rng(seed);
    const int qmin = std::max(k_lo - s, 1 - mesh), qmax = k_hi - s;
    for (Coord i = 0; i < 2; ++i)
        for (Coord j = 0; j < 2; ++j) {
            if (qmax < qmin) continue;
            std::uniform_int_distribution<int> pick(qmin, qmax);
            int q0 = pick(rng), q1 = pick(rng);
            if (q0 > q1) std::swap(q0, q1);
            if (q1 == q0 && q1 < qmax) ++q1;
            if (full_depth) q0 = qmin, q1 = qmax;
            // Corner on the level-(q1 + s) grid inside the slot.
            const Coord step = Coord{1} << (q1 + s + mesh);
            std::uniform_int_distribution<Coord> slot(0, L / step - 1);
            add_tower(g, {i * L + slot(rng) * step, j * L + slot(rng) * step}, q0, q1, s, 1.0);
        }
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (double& v : g.samples()) v += u(rng);
    return g;
}

}  // namespace rsi::lab
