// Operators on grid functions: T_j, the localized T_K, the maximal dyadic T_*,
// the direct truncated maximal operator and M_Omega.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "rsi/dyadic.hpp"
#include "rsi/fft.hpp"
#include "rsi/kernel.hpp"

namespace rsi {

inline GridFunction apply_Tj(int j, const SphereFunction& omega, const GridFunction& f) {
    return convolve(build_kernel(j, omega, f.mesh_exp()), f);
}

/// Kernel convolvers for one Omega on one mesh, built on first use per level.
class KernelBank {
public:
    KernelBank(SphereFunction omega, int mesh) : omega_(std::move(omega)), mesh_(mesh) {}

    const SphereFunction& omega() const { return omega_; }
    int mesh() const { return mesh_; }

    KernelConvolver& at(int j) {
        auto it = bank_.find(j);
        if (it != bank_.end()) return *it->second;
        auto c = std::make_unique<KernelConvolver>(build_kernel(j, omega_, mesh_));
        return *(bank_[j] = std::move(c));
    }

    GridFunction apply(int j, const GridFunction& f) { return at(j)(f); }

private:
    SphereFunction omega_;
    int mesh_;
    std::map<int, std::unique_ptr<KernelConvolver>> bank_;
};

/// T_K g = K_k * (g chi_{1/2 K}); the output box lies inside K.
inline GridFunction apply_TK(KernelConvolver& kk, const DyadicCube& K, const GridFunction& g) {
    const GridFunction local = g.restricted(K.half_lattice_box(g.mesh_exp()));
    if (local.empty()) return GridFunction(g.mesh_exp(), {});
    return kk(local);
}

inline GridFunction apply_TK(const DyadicCube& K, const SphereFunction& omega, const GridFunction& g) {
    KernelConvolver kk(build_kernel(K.level, omega, g.mesh_exp()));
    return apply_TK(kk, K, g);
}

/// sum over the four shifts and all level-k cubes of T_K g.
inline GridFunction sum_TK(KernelConvolver& kk, int k, const GridFunction& g) {
    GridFunction total(g.mesh_exp(), {});
    const LatticeBox supp = g.support_box();
    if (supp.empty()) return total;
    for (const Shift& w : kAllShifts)
        for (const DyadicCube& K : cubes_meeting(supp, g.mesh_exp(), k, w)) total += apply_TK(kk, K, g);
    return total;
}

/// T_* f = max over l in [lo, hi] of |sum_{l <= j <= hi} T_j f|, one suffix sweep.
inline GridFunction maximal_dyadic(KernelBank& bank, const GridFunction& f, LevelRange levels) {
    if (levels.empty()) throw std::invalid_argument("empty level range");
    GridFunction partial(f.mesh_exp(), {});
    GridFunction sup(f.mesh_exp(), {});
    for (int j = levels.hi; j >= levels.lo; --j) {
        partial += bank.apply(j, f);
        if (!sup.box().contains(partial.box())) sup = sup.reboxed(sup.box().unite(partial.box()));
        partial.for_each([&](Coord x, Coord y, double v) {
            double& s = sup.ref(x, y);
            s = std::max(s, std::abs(v));
        });
    }
    return sup;
}

inline GridFunction maximal_dyadic(const SphereFunction& omega, const GridFunction& f, LevelRange levels) {
    KernelBank bank(omega, f.mesh_exp());
    return maximal_dyadic(bank, f, levels);
}

namespace detail {

/// Squared radii in lattice units; checks the grid is increasing and resolvable.
inline std::vector<double> lattice_radii_sq(const std::vector<double>& radii, double h, double min_radius,
                                            const char* err) {
    if (radii.empty()) throw std::invalid_argument("radius grid is empty");
    std::vector<double> r2;
    for (double r : radii) {
        if (!(r >= min_radius * h)) throw std::invalid_argument(err);
        r2.push_back((r / h) * (r / h));
    }
    std::vector<double> sorted = r2;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != r2) throw std::invalid_argument("radius grid must be increasing");
    return r2;
}

}  // namespace detail

/// max over eps in the grid of |sum_{|x-y| > eps} Omega(x-y) / |x-y|^2 f(y) h^2|,
/// evaluated on `eval`. Raw kernel, no smoothing.
inline GridFunction maximal_truncated_direct(const SphereFunction& omega, const GridFunction& f,
                                             const std::vector<double>& eps_grid, const LatticeBox& eval) {
    const double h = f.h();
    const std::vector<double> e2 = detail::lattice_radii_sq(eps_grid, h, 4.0, "truncation below mesh scale");
    GridFunction out(f.mesh_exp(), eval);
    const std::size_t nb = e2.size();
    struct Src {
        Coord x, y;
        double v;
    };
    std::vector<Src> src;
    f.for_each([&](Coord x, Coord y, double v) {
        if (v != 0.0) src.push_back({x, y, v});
    });
    const int n = omega.arc_count();
    std::vector<double> bins(nb + 1);
    out.for_each_mut([&](Coord x, Coord y, double& o) {
        std::fill(bins.begin(), bins.end(), 0.0);
        for (const Src& s : src) {
            const Coord dx = x - s.x, dy = y - s.y;
            if (dx == 0 && dy == 0) continue;
            const double d2 = static_cast<double>(dx * dx + dy * dy);
            // bin b collects pairs with e2[b-1] < d2 <= e2[b]; those beyond all radii go to nb.
            const std::size_t b = static_cast<std::size_t>(std::lower_bound(e2.begin(), e2.end(), d2) - e2.begin());
            if (b == 0) continue;
            const int a = SphereFunction::arc_index(static_cast<double>(dx), static_cast<double>(dy), n);
            bins[b] += omega.value(a) / d2 * s.v;
        }
        // |x - y| > eps_i  <=>  bin > i.
        double acc = 0.0, best = 0.0;
        for (std::size_t i = nb; i-- > 0;) {
            acc += bins[i + 1];
            best = std::max(best, std::abs(acc));
        }
        o = best;  // the h^2 weight cancels the 1/h^2 of lattice radii
    });
    return out;
}

/// max over r in the grid of r^{-2} sum_{|x-y| < r} |Omega(x-y)| |f(y)| h^2 on `eval`.
/// The y = x term uses the mean of |Omega|.
inline GridFunction m_omega(const SphereFunction& omega, const GridFunction& f, const std::vector<double>& radii,
                            const LatticeBox& eval) {
    const double h = f.h();
    const std::vector<double> r2 = detail::lattice_radii_sq(radii, h, 4.0, "truncation below mesh scale");
    const double abs_mean = l1_norm(omega) / (2.0 * std::numbers::pi);
    GridFunction out(f.mesh_exp(), eval);
    struct Src {
        Coord x, y;
        double v;
    };
    std::vector<Src> src;
    f.for_each([&](Coord x, Coord y, double v) {
        if (v != 0.0) src.push_back({x, y, std::abs(v)});
    });
    const int n = omega.arc_count();
    const std::size_t nb = r2.size();
    std::vector<double> bins(nb + 1);
    out.for_each_mut([&](Coord x, Coord y, double& o) {
        std::fill(bins.begin(), bins.end(), 0.0);
        for (const Src& s : src) {
            const Coord dx = x - s.x, dy = y - s.y;
            const double d2 = static_cast<double>(dx * dx + dy * dy);
            // first radius with d2 < r2[b]
            const std::size_t b = static_cast<std::size_t>(std::upper_bound(r2.begin(), r2.end(), d2) - r2.begin());
            if (b == nb) continue;
            const double w = (dx == 0 && dy == 0)
                                 ? abs_mean
                                 : std::abs(omega.value(SphereFunction::arc_index(static_cast<double>(dx),
                                                                                 static_cast<double>(dy), n)));
            bins[b] += w * s.v;
        }
        double acc = 0.0, best = 0.0;
        for (std::size_t i = 0; i < nb; ++i) {
            acc += bins[i];
            best = std::max(best, acc / r2[i]);  // h^2 / r^2 in lattice units
        }
        o = best;
    });
    return out;
}

}  // namespace rsi
