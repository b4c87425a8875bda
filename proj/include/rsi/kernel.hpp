// Smooth radial partition of unity and the dyadic kernel pieces
// K_j(x) = phi(2^{-j} x) Omega(x / |x|) / |x|^2 sampled on the lattice.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rsi/grid.hpp"
#include "rsi/sphere.hpp"

namespace rsi {

/// C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t).
inline double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

/// theta(r) = 1 on r <= 1/8, 0 on r >= 1/4.
inline double radial_cutoff(double r) { return smooth_step((0.25 - r) * 8.0); }

/// phi(x) = theta(|x|) - theta(2|x|), supported in 1/16 < |x| < 1/4.
inline double phi_radial(double r) { return radial_cutoff(r) - radial_cutoff(2.0 * r); }
inline double phi(double x, double y) { return phi_radial(std::hypot(x, y)); }

/// Lattice radius of the box holding K_j: the open annulus ends at R = 2^{j-2} / h.
inline Coord kernel_radius(int j, int mesh) {
    const int e = j - 2 + mesh;
    if (e < 0) throw std::invalid_argument("level j below mesh resolution");
    return Coord{1} << e;
}

/// Smallest j with 2^{j-4} >= 8h.
inline int min_resolvable_level(int mesh) { return 7 - mesh; }

inline void require_resolvable(int j, int mesh) {
    if (j < min_resolvable_level(mesh)) throw std::invalid_argument("level j below mesh resolution");
}

/// Samples of K_j restricted to arcs with mask[a] != 0 (empty mask: all arcs).
inline GridFunction build_kernel_masked(int j, const SphereFunction& omega, int mesh, const std::vector<char>& mask) {
    require_resolvable(j, mesh);
    const Coord R = kernel_radius(j, mesh);
    GridFunction k(mesh, {-(R - 1), -(R - 1), R, R});
    const double h = mesh_size(mesh);
    const double scale = std::ldexp(1.0, -j);
    const int n = omega.arc_count();
    k.for_each_mut([&](Coord x, Coord y, double& v) {
        if (x == 0 && y == 0) return;
        const double r = std::hypot(static_cast<double>(x), static_cast<double>(y)) * h;
        const double p = phi_radial(r * scale);
        if (p == 0.0) return;
        const int a = SphereFunction::arc_index(static_cast<double>(x), static_cast<double>(y), n);
        if (!mask.empty() && !mask[static_cast<std::size_t>(a)]) return;
        v = p * omega.value(a) / (r * r);
    });
    return k;
}

inline GridFunction build_kernel(int j, const SphereFunction& omega, int mesh) {
    return build_kernel_masked(j, omega, mesh, {});
}

/// K_j masked to the directions of one sector (arcs with sector_of_arc[a] == v).
inline GridFunction build_kernel_slice(int j, const SphereFunction& omega, int mesh, const std::vector<int>& sector_of_arc,
                                       int v) {
    if (static_cast<int>(sector_of_arc.size()) != omega.arc_count())
        throw std::invalid_argument("sector map does not match arc count");
    std::vector<char> mask(sector_of_arc.size());
    for (std::size_t a = 0; a < mask.size(); ++a) mask[a] = sector_of_arc[a] == v;
    return build_kernel_masked(j, omega, mesh, mask);
}

/// Integral of phi(y) / |y|^2 over the plane per unit of |Omega|: ln 2.
inline double kernel_l1_per_omega() { return std::log(2.0); }

}  // namespace rsi
