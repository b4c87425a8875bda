// Cube families driving the maximal-function linearization: active cubes,
// the sets F^n, the partition I^{#,n}, the layers M_u and a Rademacher-Menshov
// harness.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

#include "rsi/czd.hpp"
#include "rsi/dyadic.hpp"
#include "rsi/operator.hpp"
#include "rsi/report.hpp"

namespace rsi {

struct ActiveCube {
    DyadicCube cube;
    std::vector<DyadicCube> witnesses;  // bad Q of level k - s with b_Q chi_{1/2 K} != 0
};

/// All K in D^w with level in range and b_{k-s} chi_{1/2 K} != 0, sorted.
inline std::vector<ActiveCube> active_cubes(const CZDecomposition& dec, int s, Shift w, LevelRange levels) {
    std::map<DyadicCube, std::vector<DyadicCube>> found;
    for (const BadCube& q : dec.bad) {
        const int k = q.cube.level + s;
        if (k < levels.lo || k > levels.hi) continue;
        const LatticeBox supp = q.b.support_box();
        if (supp.empty()) continue;
        const int mesh = q.b.mesh_exp();
        for (const DyadicCube& K : cubes_meeting(supp, mesh, k, w)) {
            const LatticeBox hb = K.half_lattice_box(mesh).intersect(supp);
            bool hit = false;
            for (Coord y = hb.y0; y < hb.y1 && !hit; ++y)
                for (Coord x = hb.x0; x < hb.x1; ++x)
                    if (q.b.at(x, y) != 0.0) {
                        hit = true;
                        break;
                    }
            if (hit) found[K].push_back(q.cube);
        }
    }
    std::vector<ActiveCube> out;
    for (auto& [K, ws] : found) out.push_back({K, std::move(ws)});
    return out;
}

/// Every witness lies in 1/2 K.
inline Report check_witness_geometry(const std::vector<ActiveCube>& active, int mesh) {
    int bad = 0;
    for (const ActiveCube& a : active)
        for (const DyadicCube& q : a.witnesses)
            if (!a.cube.half_lattice_box(mesh).contains(q.lattice_box(mesh))) ++bad;
    Report r;
    r.at_most("witness_outside_half_cube", bad, 0.0);
    return r;
}

/// Union of lattice cells on the grid compressed to the edges of a cube family.
class CellSet {
public:
    CellSet() = default;

    explicit CellSet(const std::vector<LatticeBox>& boxes) {
        for (const LatticeBox& b : boxes) {
            xs_.push_back(b.x0);
            xs_.push_back(b.x1);
            ys_.push_back(b.y0);
            ys_.push_back(b.y1);
        }
        const auto uniq = [](std::vector<Coord>& v) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        };
        uniq(xs_);
        uniq(ys_);
        in_.assign(cells_x() * cells_y(), 0);
    }

    std::size_t cells_x() const { return xs_.empty() ? 0 : xs_.size() - 1; }
    std::size_t cells_y() const { return ys_.empty() ? 0 : ys_.size() - 1; }

    /// Range of compressed cells spanned by a box whose edges are on the grid.
    std::pair<std::size_t, std::size_t> range_x(const LatticeBox& b) const { return range(xs_, b.x0, b.x1); }
    std::pair<std::size_t, std::size_t> range_y(const LatticeBox& b) const { return range(ys_, b.y0, b.y1); }

    bool at(std::size_t i, std::size_t j) const { return in_[j * cells_x() + i] != 0; }
    void set(std::size_t i, std::size_t j, bool v) { in_[j * cells_x() + i] = v; }

    bool empty() const { return std::none_of(in_.begin(), in_.end(), [](char c) { return c != 0; }); }

    /// Area with lattice spacing 2^{-mesh}.
    double measure(int mesh) const {
        long double cells = 0.0L;
        for (std::size_t j = 0; j < cells_y(); ++j)
            for (std::size_t i = 0; i < cells_x(); ++i)
                if (at(i, j)) cells += static_cast<long double>(xs_[i + 1] - xs_[i]) * (ys_[j + 1] - ys_[j]);
        return static_cast<double>(cells) * mesh_size(mesh) * mesh_size(mesh);
    }

    /// Every cell of b lies in the set.
    bool contains(const LatticeBox& b) const {
        const auto [i0, i1] = range_x(b);
        const auto [j0, j1] = range_y(b);
        for (std::size_t j = j0; j < j1; ++j)
            for (std::size_t i = i0; i < i1; ++i)
                if (!at(i, j)) return false;
        return true;
    }

    /// Lattice cell (x, y) lies in the set.
    bool contains_cell(Coord x, Coord y) const {
        if (xs_.empty() || x < xs_.front() || x >= xs_.back() || y < ys_.front() || y >= ys_.back()) return false;
        const std::size_t i = static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin()) - 1;
        const std::size_t j = static_cast<std::size_t>(std::upper_bound(ys_.begin(), ys_.end(), y) - ys_.begin()) - 1;
        return at(i, j);
    }

    bool subset_of(const CellSet& o) const {
        for (std::size_t k = 0; k < in_.size(); ++k)
            if (in_[k] && !o.in_[k]) return false;
        return true;
    }

    CellSet cleared() const {
        CellSet c = *this;
        std::fill(c.in_.begin(), c.in_.end(), 0);
        return c;
    }

    /// Marks cells whose coverage by `boxes` exceeds `threshold`.
    CellSet over_threshold(const std::vector<LatticeBox>& boxes, double threshold) const {
        CellSet c = cleared();
        const std::size_t nx = cells_x() + 1;
        std::vector<long> diff(nx * (cells_y() + 1), 0);
        for (const LatticeBox& b : boxes) {
            const auto [i0, i1] = range_x(b);
            const auto [j0, j1] = range_y(b);
            diff[j0 * nx + i0] += 1;
            diff[j0 * nx + i1] -= 1;
            diff[j1 * nx + i0] -= 1;
            diff[j1 * nx + i1] += 1;
        }
        for (std::size_t j = 0; j <= cells_y(); ++j)
            for (std::size_t i = 0; i <= cells_x(); ++i) {
                long v = diff[j * nx + i];
                if (i > 0) v += diff[j * nx + i - 1];
                if (j > 0) v += diff[(j - 1) * nx + i];
                if (i > 0 && j > 0) v -= diff[(j - 1) * nx + i - 1];
                diff[j * nx + i] = v;
            }
        for (std::size_t j = 0; j < cells_y(); ++j)
            for (std::size_t i = 0; i < cells_x(); ++i)
                if (static_cast<double>(diff[j * nx + i]) > threshold) c.set(i, j, true);
        return c;
    }

private:
    static std::pair<std::size_t, std::size_t> range(const std::vector<Coord>& v, Coord a, Coord b) {
        const auto lo = std::lower_bound(v.begin(), v.end(), a);
        const auto hi = std::lower_bound(v.begin(), v.end(), b);
        if (lo == v.end() || *lo != a || hi == v.end() || *hi != b)
            throw std::invalid_argument("box edges are not on the compressed grid");
        return {static_cast<std::size_t>(lo - v.begin()), static_cast<std::size_t>(hi - v.begin())};
    }

    std::vector<Coord> xs_, ys_;
    std::vector<char> in_;
};

/// u_0 = C0 4^s.
inline double overlap_threshold(double C0, int s) { return C0 * std::exp2(2.0 * s); }

/// F^1 = {sum over active K of chi_K > u0}, F^n the same over K inside F^{n-1};
/// stops at the first empty set (not included) or after n_max sets.
inline std::vector<CellSet> build_F_levels(const std::vector<ActiveCube>& active, int mesh, double C0, int s,
                                           int n_max) {
    if (!(C0 > 0.0)) throw std::invalid_argument("C0 must be positive");
    std::vector<LatticeBox> boxes;
    for (const ActiveCube& a : active) boxes.push_back(a.cube.lattice_box(mesh));
    const double u0 = overlap_threshold(C0, s);
    std::vector<CellSet> F;
    if (boxes.empty()) return F;
    const CellSet grid(boxes);
    std::vector<LatticeBox> inside = boxes;
    for (int n = 1; n <= n_max; ++n) {
        CellSet next = grid.over_threshold(inside, u0);
        if (next.empty()) break;
        F.push_back(next);
        std::vector<LatticeBox> keep;
        for (const LatticeBox& b : inside)
            if (next.contains(b)) keep.push_back(b);
        inside.swap(keep);
    }
    return F;
}

/// I^{#,1} = active K not inside F^1; I^{#,n} = K inside F^{n-1} but not F^n.
/// Cubes inside the last computed F go to one extra final part.
inline std::vector<std::vector<DyadicCube>> partition_I_sharp(const std::vector<ActiveCube>& active, int mesh,
                                                              const std::vector<CellSet>& F) {
    std::vector<std::vector<DyadicCube>> parts(F.size() + 1);
    for (const ActiveCube& a : active) {
        const LatticeBox b = a.cube.lattice_box(mesh);
        std::size_t n = 0;
        while (n < F.size() && F[n].contains(b)) ++n;
        parts[n].push_back(a.cube);
    }
    while (!parts.empty() && parts.back().empty()) parts.pop_back();
    return parts;
}

inline bool strictly_inside(const DyadicCube& k, const DyadicCube& j, int mesh) {
    const LatticeBox a = k.lattice_box(mesh), b = j.lattice_box(mesh);
    return b.contains(a) && !(a == b);
}

/// Largest number of strict ancestors any cube of the part has inside the part.
inline int max_ancestors(const std::vector<DyadicCube>& part, int mesh) {
    int best = 0;
    for (const DyadicCube& k : part) {
        int c = 0;
        for (const DyadicCube& j : part)
            if (strictly_inside(k, j, mesh)) ++c;
        best = std::max(best, c);
    }
    return best;
}

/// M_1 = maximal cubes of the part, M_{u+1} = maximal cubes of the remainder.
inline std::vector<std::vector<DyadicCube>> select_layers(const std::vector<DyadicCube>& part, int mesh) {
    std::vector<std::vector<DyadicCube>> layers;
    std::vector<DyadicCube> rest = part;
    while (!rest.empty()) {
        std::vector<DyadicCube> top, below;
        for (const DyadicCube& k : rest) {
            const bool covered =
                std::any_of(rest.begin(), rest.end(), [&](const DyadicCube& j) { return strictly_inside(k, j, mesh); });
            (covered ? below : top).push_back(k);
        }
        layers.push_back(std::move(top));
        rest.swap(below);
    }
    return layers;
}

/// Pairwise disjointness within layers and nesting across layers.
inline Report check_layers(const std::vector<std::vector<DyadicCube>>& layers, int mesh) {
    int overlap = 0, nest = 0;
    for (std::size_t u = 0; u < layers.size(); ++u) {
        for (std::size_t a = 0; a < layers[u].size(); ++a)
            for (std::size_t b = a + 1; b < layers[u].size(); ++b)
                if (layers[u][a].lattice_box(mesh).intersects(layers[u][b].lattice_box(mesh))) ++overlap;
        for (std::size_t v = u + 1; v < layers.size(); ++v)
            for (const DyadicCube& J : layers[u])
                for (const DyadicCube& K : layers[v]) {
                    const LatticeBox jb = J.lattice_box(mesh), kb = K.lattice_box(mesh);
                    if (jb.intersects(kb) && !jb.contains(kb)) ++nest;
                }
    }
    Report r;
    r.at_most("layer_overlaps", overlap, 0.0);
    r.at_most("nesting_violations", nest, 0.0);
    return r;
}

struct CubeLayering {
    int s = 0;
    Shift shift{};
    double C0 = 0.0;
    int mesh = 0;
    std::vector<ActiveCube> active;
    std::vector<CellSet> F;
    std::vector<std::vector<DyadicCube>> partitions;
    std::vector<std::vector<std::vector<DyadicCube>>> layers;  // per partition
};

inline CubeLayering build_layering(const CZDecomposition& dec, int s, Shift w, LevelRange levels, double C0,
                                   int n_max = 64) {
    CubeLayering L;
    L.s = s;
    L.shift = w;
    L.C0 = C0;
    L.mesh = dec.good.mesh_exp();
    L.active = active_cubes(dec, s, w, levels);
    L.F = build_F_levels(L.active, L.mesh, C0, s, n_max);
    L.partitions = partition_I_sharp(L.active, L.mesh, L.F);
    for (const auto& p : L.partitions) L.layers.push_back(select_layers(p, L.mesh));
    return L;
}

/// Carries cube -> T_K b_{k-s} and assembles the sums used by the linearization.
class CubeOperator {
public:
    CubeOperator(const CZDecomposition& dec, int s, KernelBank& bank) : dec_(dec), s_(s), bank_(bank) {}

    const GridFunction& bad_at(int level) {
        auto it = b_.find(level);
        if (it != b_.end()) return it->second;
        return b_[level] = dec_.bad_at_level(level);
    }

    GridFunction apply(const DyadicCube& K) { return apply_TK(bank_.at(K.level), K, bad_at(K.level - s_)); }

private:
    const CZDecomposition& dec_;
    int s_;
    KernelBank& bank_;
    std::map<int, GridFunction> b_;
};

/// beta_u = sum over K in M_u of T_K b_{k-s}.
inline std::vector<GridFunction> layer_sums(const std::vector<std::vector<DyadicCube>>& layers, CubeOperator& op,
                                            int mesh) {
    std::vector<GridFunction> beta;
    for (const auto& M : layers) {
        GridFunction s(mesh, {});
        for (const DyadicCube& K : M) s += op.apply(K);
        beta.push_back(std::move(s));
    }
    return beta;
}

/// sup over v of |beta_1 + ... + beta_v|.
inline GridFunction linearized_sup(const std::vector<DyadicCube>& part,
                                   const std::vector<std::vector<DyadicCube>>& layers,
                                   const std::vector<GridFunction>& beta, int mesh) {
    if (layers.size() != beta.size()) throw std::invalid_argument("layer/part mismatch");
    std::size_t n = 0;
    for (const auto& M : layers) n += M.size();
    if (n != part.size()) throw std::invalid_argument("layer/part mismatch");
    GridFunction partial(mesh, {}), sup(mesh, {});
    for (const GridFunction& b : beta) {
        partial += b;
        if (!sup.box().contains(partial.box())) sup = sup.reboxed(sup.box().unite(partial.box()));
        partial.for_each([&](Coord x, Coord y, double v) {
            double& s = sup.ref(x, y);
            s = std::max(s, std::abs(v));
        });
    }
    return sup;
}

/// sup over l of |sum_{K in part, level >= l} T_K b_{k-s}|, accumulated from
/// the top level down.
inline GridFunction truncation_sup(const std::vector<DyadicCube>& part, CubeOperator& op, int mesh) {
    std::map<int, std::vector<DyadicCube>, std::greater<int>> by_level;
    for (const DyadicCube& K : part) by_level[K.level].push_back(K);
    GridFunction partial(mesh, {}), sup(mesh, {});
    for (auto& [k, cubes] : by_level) {
        for (const DyadicCube& K : cubes) partial += op.apply(K);
        if (!sup.box().contains(partial.box())) sup = sup.reboxed(sup.box().unite(partial.box()));
        partial.for_each([&](Coord x, Coord y, double v) {
            double& s = sup.ref(x, y);
            s = std::max(s, std::abs(v));
        });
    }
    return sup;
}

struct RmReport {
    int n = 0;
    bool exhaustive = false;
    double B = 0.0;      // max over sign patterns of ||sum eps_j f_j||_2
    double S = 0.0;      // ||sup_M |sum_{j <= M} f_j| ||_2
    double ratio = 0.0;  // S / (B (floor(log2 N) + 2))
};

/// Rademacher-Menshov harness. Sign patterns enumerate exhaustively up to
/// `exhaustive_limit` functions, otherwise 512 seeded samples.
inline RmReport rm_check(const std::vector<GridFunction>& fs, int exhaustive_limit, std::uint64_t seed = 1) {
    if (fs.empty()) throw std::invalid_argument("rm_check needs at least one function");
    const int N = static_cast<int>(fs.size());
    const int mesh = fs.front().mesh_exp();
    LatticeBox box{};
    for (const GridFunction& f : fs) box = box.unite(f.box());
    std::vector<GridFunction> g;
    for (const GridFunction& f : fs) g.push_back(f.reboxed(box));
    const double area = mesh_size(mesh) * mesh_size(mesh);

    std::vector<double> gram(static_cast<std::size_t>(N * N), 0.0);
    for (int a = 0; a < N; ++a)
        for (int b = a; b < N; ++b) {
            double s = 0.0;
            const auto& x = g[a].samples();
            const auto& y = g[b].samples();
            for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
            gram[a * N + b] = gram[b * N + a] = s * area;
        }
    const auto quad = [&](const std::vector<int>& eps) {
        double q = 0.0;
        for (int a = 0; a < N; ++a)
            for (int b = 0; b < N; ++b) q += eps[a] * eps[b] * gram[a * N + b];
        return std::sqrt(std::max(q, 0.0));
    };
    RmReport r;
    r.n = N;
    r.exhaustive = N <= exhaustive_limit;
    std::vector<int> eps(static_cast<std::size_t>(N));
    if (r.exhaustive) {
        for (std::uint64_t p = 0; p < (std::uint64_t{1} << N); ++p) {
            for (int j = 0; j < N; ++j) eps[j] = (p >> j) & 1 ? -1 : 1;
            r.B = std::max(r.B, quad(eps));
        }
    } else {
        std::mt19937_64 rng(seed);
        for (int t = 0; t < 512; ++t) {
            for (int j = 0; j < N; ++j) eps[j] = (rng() & 1) ? -1 : 1;
            r.B = std::max(r.B, quad(eps));
        }
    }
    std::vector<double> partial(g.front().samples().size(), 0.0), sup(partial.size(), 0.0);
    for (const GridFunction& f : g)
        for (std::size_t i = 0; i < partial.size(); ++i) {
            partial[i] += f.samples()[i];
            sup[i] = std::max(sup[i], std::abs(partial[i]));
        }
    double s2 = 0.0;
    for (double v : sup) s2 += v * v;
    r.S = std::sqrt(s2 * area);
    const double denom = r.B * (std::floor(std::log2(static_cast<double>(N))) + 2.0);
    r.ratio = denom > 0.0 ? r.S / denom : 0.0;
    return r;
}

/// The packing chain for a set A (a lattice box):
///   sum_{K in A} |K| <= 4^s/alpha sum_K int_{Q_K} |f| <= 4^s/alpha sum_{Q in A} int_Q |f|
///                    <= 4^{s+1} sum_{Q in A} |Q| <= 4^{s+1} min(|A|, ||f||_1 / alpha)
/// with Q_K the first witness of K. Each link is a separate check, plus
/// witness distinctness (CZ cubes are disjoint, so distinct means disjoint).
inline Report packing_chain(const std::vector<ActiveCube>& active, const CZDecomposition& dec, int s,
                            const LatticeBox& A, double f_l1) {
    const int mesh = dec.good.mesh_exp();
    const double alpha = dec.alpha;
    const double c = std::exp2(2.0 * s);
    std::map<DyadicCube, double> mass;
    for (const BadCube& q : dec.bad) mass[q.cube] = q.avg_abs * q.cube.measure();
    double l1 = 0.0, l2 = 0.0, l3 = 0.0, qarea = 0.0;
    std::map<DyadicCube, int> used;
    for (const ActiveCube& a : active) {
        if (!A.contains(a.cube.lattice_box(mesh))) continue;
        l1 += a.cube.measure();
        const DyadicCube& q = a.witnesses.front();
        l2 += mass.at(q);
        ++used[q];
    }
    l2 *= c / alpha;
    for (const BadCube& q : dec.bad) {
        if (!A.contains(q.cube.lattice_box(mesh))) continue;
        l3 += mass.at(q.cube);
        qarea += q.cube.measure();
    }
    l3 *= c / alpha;
    const double l4 = 4.0 * c * qarea;
    const double a_area = static_cast<double>(A.cells()) * mesh_size(mesh) * mesh_size(mesh);
    const double l5 = 4.0 * c * std::min(a_area, f_l1 / alpha);
    int repeats = 0;
    for (const auto& [q, n] : used) repeats += n - 1;
    Report r;
    r.add("cubes_le_witness_mass", l1, l2, l1 <= l2);
    r.add("witness_mass_le_bad_mass", l2, l3, l2 <= l3);
    r.add("bad_mass_le_bad_area", l3, l4, l3 <= l4);
    r.add("bad_area_le_min", l4, l5, l4 <= l5);
    r.at_most("witness_repeats", repeats, 0.0);
    return r;
}

/// `n,measure`
inline void write_f_levels_csv(std::ostream& os, const std::vector<CellSet>& F, int mesh) {
    os << "n,measure\n";
    os.precision(17);
    for (std::size_t n = 0; n < F.size(); ++n) os << n + 1 << ',' << F[n].measure(mesh) << '\n';
}

/// `n,u,cube,level`
inline void write_layers_csv(std::ostream& os, const CubeLayering& L) {
    os << "n,u,cube,level\n";
    for (std::size_t n = 0; n < L.layers.size(); ++n)
        for (std::size_t u = 0; u < L.layers[n].size(); ++u)
            for (const DyadicCube& K : L.layers[n][u])
                os << n + 1 << ',' << u + 1 << ",\"" << K.to_string() << "\"," << K.level << '\n';
}

}  // namespace rsi
