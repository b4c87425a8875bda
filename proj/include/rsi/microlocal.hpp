// Direction nets on the circle, their sector partition and the directional
// frequency multipliers G_v.
#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "rsi/fft.hpp"
#include "rsi/kernel.hpp"
#include "rsi/report.hpp"

namespace rsi {

inline double chord(double a, double b) { return 2.0 * std::abs(std::sin(0.5 * (a - b))); }

struct DirectionNet {
    int s = 1;
    double gamma = 0.25;
    int arc_count = 1;
    double rho = 0.0;                 // 2^{-s gamma - 4}
    std::vector<int> center_arcs;     // arc holding e_v
    std::vector<double> angles;       // e_v = (cos, sin)
    std::vector<int> sector_of_arc;   // E_v as a map arc -> v

    int size() const { return static_cast<int>(angles.size()); }
    double scale() const { return std::exp2(s * gamma); }
    double arc_width() const { return 2.0 * std::numbers::pi / arc_count; }

    std::vector<int> arcs_of(int v) const {
        std::vector<int> out;
        for (int a = 0; a < arc_count; ++a)
            if (sector_of_arc[static_cast<std::size_t>(a)] == v) out.push_back(a);
        return out;
    }
};

/// Largest chord between points of the union of the given arcs.
inline double sector_diameter(const std::vector<int>& arcs, int arc_count) {
    const double w = 2.0 * std::numbers::pi / arc_count;
    std::vector<double> pts;
    for (int a : arcs) {
        pts.push_back(a * w);
        pts.push_back((a + 1) * w);
    }
    double d = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, chord(pts[i], pts[j]));
    return d;
}

inline Report check_net(const DirectionNet& net) {
    Report r;
    const int V = net.size();
    double sep = INFINITY;
    for (int i = 0; i < V; ++i)
        for (int j = i + 1; j < V; ++j) sep = std::min(sep, chord(net.angles[i], net.angles[j]));
    if (V < 2) sep = net.rho;
    r.add("separation", sep, net.rho, sep >= net.rho);

    // Covering at the arc resolution: every arc midpoint within rho of some center.
    double cover = 0.0;
    const double w = net.arc_width();
    for (int a = 0; a < net.arc_count; ++a) {
        double best = INFINITY;
        for (double t : net.angles) best = std::min(best, chord((a + 0.5) * w, t));
        cover = std::max(cover, best);
    }
    r.at_most("covering", cover, net.rho);

    int bad_assign = 0, center_outside = 0;
    std::vector<int> count(static_cast<std::size_t>(V), 0);
    for (int v : net.sector_of_arc) {
        if (v < 0 || v >= V) ++bad_assign;
        else ++count[static_cast<std::size_t>(v)];
    }
    for (int v = 0; v < V; ++v) {
        if (net.sector_of_arc[static_cast<std::size_t>(net.center_arcs[v])] != v) ++center_outside;
        if (count[static_cast<std::size_t>(v)] == 0) ++bad_assign;
    }
    r.at_most("sector_partition_defects", bad_assign, 0.0);
    r.at_most("centers_outside_sector", center_outside, 0.0);

    double diam = 0.0;
    for (int v = 0; v < V; ++v) diam = std::max(diam, sector_diameter(net.arcs_of(v), net.arc_count));
    r.at_most("sector_diameter", diam, 4.0 * net.rho);
    r.at_most("center_count_over_2pi_scale", V / (2.0 * std::numbers::pi * 16.0 * net.scale()), 1.0);
    return r;
}

/// Greedy maximal rho-separated set of arc midpoints in angular order; sectors
/// go to the nearest center, ties to the lower index.
inline DirectionNet build_direction_net(int s, double gamma, int arc_count) {
    if (s < 1) throw std::invalid_argument("s must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
    DirectionNet net;
    net.s = s;
    net.gamma = gamma;
    net.arc_count = arc_count;
    net.rho = std::exp2(-s * gamma - 4.0);
    const double w = net.arc_width();
    if (net.rho >= 2.0) {
        net.center_arcs = {0};
        net.angles = {0.5 * w};
        net.sector_of_arc.assign(static_cast<std::size_t>(arc_count), 0);
        return net;
    }
    if (w > net.rho) throw std::invalid_argument("increase arc_count for this (s,gamma)");
    for (int a = 0; a < arc_count; ++a) {
        const double t = (a + 0.5) * w;
        bool ok = true;
        for (double c : net.angles)
            if (chord(t, c) < net.rho) {
                ok = false;
                break;
            }
        if (ok) {
            net.center_arcs.push_back(a);
            net.angles.push_back(t);
        }
    }
    net.sector_of_arc.resize(static_cast<std::size_t>(arc_count));
    for (int a = 0; a < arc_count; ++a) {
        const double t = (a + 0.5) * w;
        int best = 0;
        double bd = INFINITY;
        for (int v = 0; v < net.size(); ++v) {
            const double d = chord(t, net.angles[v]);
            if (d < bd) {
                bd = d;
                best = v;
            }
        }
        net.sector_of_arc[static_cast<std::size_t>(a)] = best;
    }
    const Report r = check_net(net);
    for (const Check& c : r.checks)
        if (!c.pass) throw std::logic_error("direction net invariant failed: " + c.name);
    return net;
}

/// Phi(t) = 1 on |t| <= 2, 0 on |t| >= 4.
inline double cone_cutoff(double t) { return smooth_step((4.0 - std::abs(t)) / 2.0); }

/// Symbol of G_v at frequency xi; 1 at xi = 0.
inline double g_symbol(const DirectionNet& net, int v, double xi1, double xi2) {
    const double n = std::hypot(xi1, xi2);
    if (n == 0.0) return 1.0;
    const double t = (std::cos(net.angles[v]) * xi1 + std::sin(net.angles[v]) * xi2) / n;
    return cone_cutoff(net.scale() * t);
}

inline GridFunction apply_G(const DirectionNet& net, int v, const GridFunction& g) {
    return apply_multiplier(g, [&](double a, double b) { return g_symbol(net, v, a, b); });
}

inline GridFunction apply_I_minus_G(const DirectionNet& net, int v, const GridFunction& g) {
    return g - apply_G(net, v, g);
}

/// sum_v (I - G_v) T_j^v b as one spectral sum over the sectors; agrees with
/// sum_v apply_I_minus_G(net, v, K_j^v * b) on the same padded period.
inline GridFunction sector_remainder(const DirectionNet& net, const SphereFunction& omega, int j, const GridFunction& b,
                                     int pad_factor = 2) {
    const int mesh = b.mesh_exp();
    if (b.empty()) return GridFunction(mesh, {});
    const Coord R = kernel_radius(j, mesh);
    const LatticeBox kb{-(R - 1), -(R - 1), R, R};
    const LatticeBox out{kb.x0 + b.box().x0, kb.y0 + b.box().y0, kb.x1 + b.box().x1 - 1, kb.y1 + b.box().y1 - 1};
    const int nx = detail::next_pow2(pad_factor * out.width()), ny = detail::next_pow2(pad_factor * out.height());
    PaddedField fb(nx, ny), fk(nx, ny), acc(nx, ny);
    fb.load(b, b.anchor());
    fb.forward();
    const std::size_t nc = static_cast<std::size_t>(ny) * acc.nxc();
    for (std::size_t i = 0; i < nc; ++i) acc.spec()[i][0] = acc.spec()[i][1] = 0.0;
    // Unit frequency directions, shared by every sector.
    const double h = b.h();
    std::vector<double> u1(nc), u2(nc);
    for (int r = 0; r < ny; ++r)
        for (int c = 0; c < acc.nxc(); ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * acc.nxc() + c;
            const double a = c / (nx * h), bb = PaddedField::freq(r, ny) / (ny * h), n = std::hypot(a, bb);
            u1[i] = n > 0.0 ? a / n : 0.0;
            u2[i] = n > 0.0 ? bb / n : 0.0;
        }
    const double scale = net.scale();
    for (int v = 0; v < net.size(); ++v) {
        const GridFunction kv = build_kernel_slice(j, omega, mesh, net.sector_of_arc, v);
        if (kv.is_zero()) continue;
        const double e1 = scale * std::cos(net.angles[v]), e2 = scale * std::sin(net.angles[v]);
        fk.load(kv, kv.anchor());
        fk.forward();
        for (std::size_t i = 0; i < nc; ++i) {
            const double t = std::abs(e1 * u1[i] + e2 * u2[i]);
            if (t <= 2.0) continue;  // also covers xi = 0
            const double w = 1.0 - cone_cutoff(t);
            const double kr = fk.spec()[i][0], ki = fk.spec()[i][1], br = fb.spec()[i][0], bi = fb.spec()[i][1];
            acc.spec()[i][0] += w * (kr * br - ki * bi);
            acc.spec()[i][1] += w * (kr * bi + ki * br);
        }
    }
    acc.inverse();
    const Coord px = (nx - out.width()) / 2, py = (ny - out.height()) / 2;
    const LatticeBox period{out.x0 - px, out.y0 - py, out.x0 - px + nx, out.y0 - py + ny};
    return acc.extract(mesh, period, {out.x0, out.y0}, b.cell_area() / (static_cast<double>(nx) * ny));
}

/// `v,angle,sep_left,sector_width`
inline void write_net_csv(std::ostream& os, const DirectionNet& net) {
    os << "v,angle,sep_left,sector_width\n";
    os.precision(17);
    const int V = net.size();
    for (int v = 0; v < V; ++v) {
        const double left = V > 1 ? chord(net.angles[v], net.angles[(v + V - 1) % V]) : 2.0;
        os << v << ',' << net.angles[v] << ',' << left << ',' << net.arcs_of(v).size() * net.arc_width() << '\n';
    }
}

}  // namespace rsi
