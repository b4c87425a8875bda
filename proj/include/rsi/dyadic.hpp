// Shifted dyadic systems D^w, w in {0, 1/2}^2, with exact integer predicates.
//
// A level-k cube of D^w has corner 2^k (w + m), side 2^k. The shift scales
// with the level, so for w != 0 cubes of different levels need not nest.
#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "rsi/grid.hpp"

namespace rsi {

/// Grid shift w = (wx / 2, wy / 2) with wx, wy in {0, 1}.
struct Shift {
    int wx = 0;
    int wy = 0;
    friend bool operator==(const Shift&, const Shift&) = default;
    bool is_standard() const { return wx == 0 && wy == 0; }
};

inline constexpr Shift kStandardShift{0, 0};
inline constexpr Shift kAllShifts[4] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};

struct LevelRange {
    int lo = 0;
    int hi = 0;
    bool empty() const { return hi < lo; }
    int count() const { return empty() ? 0 : hi - lo + 1; }
};

/// Real half-open box; coordinates are dyadic rationals and stay exact in double.
struct Box {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool empty() const { return !(x0 < x1) || !(y0 < y1); }
    double area() const { return empty() ? 0.0 : (x1 - x0) * (y1 - y0); }
    bool contains(double x, double y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
    bool intersects(const Box& o) const {
        return std::max(x0, o.x0) < std::min(x1, o.x1) && std::max(y0, o.y0) < std::min(y1, o.y1);
    }
    bool contains(const Box& o) const { return o.x0 >= x0 && o.x1 <= x1 && o.y0 >= y0 && o.y1 <= y1; }
    double center_x() const { return 0.5 * (x0 + x1); }
    double center_y() const { return 0.5 * (y0 + y1); }
    friend bool operator==(const Box&, const Box&) = default;
};

struct DyadicCube {
    Shift shift{};
    int level = 0;
    Coord m1 = 0;
    Coord m2 = 0;

    double side() const { return std::ldexp(1.0, level); }

    /// Corner in units of 2^{level-1}: 2m + w.
    Coord corner_half_x() const { return 2 * m1 + shift.wx; }
    Coord corner_half_y() const { return 2 * m2 + shift.wy; }

    Box box() const {
        const double x = std::ldexp(static_cast<double>(corner_half_x()), level - 1);
        const double y = std::ldexp(static_cast<double>(corner_half_y()), level - 1);
        return {x, y, x + side(), y + side()};
    }

    double measure() const { return side() * side(); }

    /// Cells of the cube on mesh 2^{-mesh}. Needs level >= -mesh on the standard
    /// grid and level >= 1 - mesh on shifted grids.
    LatticeBox lattice_box(int mesh) const {
        if (shift.is_standard() && level + mesh >= 0) {
            const Coord n = Coord{1} << (level + mesh);
            return {m1 * n, m2 * n, (m1 + 1) * n, (m2 + 1) * n};
        }
        const int e = level + mesh - 1;
        if (e < 0) throw std::invalid_argument("cube not representable on this mesh");
        const Coord u = Coord{1} << e;
        const Coord x = corner_half_x() * u, y = corner_half_y() * u;
        return {x, y, x + 2 * u, y + 2 * u};
    }

    /// Cells of the half cube 1/2 K; requires level >= 2 - mesh.
    LatticeBox half_lattice_box(int mesh) const {
        const int e = level + mesh - 2;
        if (e < 0) throw std::invalid_argument("half cube not representable on this mesh");
        const Coord q = Coord{1} << e;  // quarter side
        const LatticeBox b = lattice_box(mesh);
        return {b.x0 + q, b.y0 + q, b.x0 + 3 * q, b.y0 + 3 * q};
    }

    /// Level-(k+1) cube of the standard grid containing this one.
    DyadicCube parent() const {
        if (!shift.is_standard())
            throw std::logic_error("shifted systems are not nested across levels");
        return {shift, level + 1, floor_div2(m1), floor_div2(m2)};
    }

    std::vector<DyadicCube> children() const {
        if (!shift.is_standard())
            throw std::logic_error("shifted systems are not nested across levels");
        return {{shift, level - 1, 2 * m1, 2 * m2},
                {shift, level - 1, 2 * m1 + 1, 2 * m2},
                {shift, level - 1, 2 * m1, 2 * m2 + 1},
                {shift, level - 1, 2 * m1 + 1, 2 * m2 + 1}};
    }

    /// `w=(0,1/2);k=3;m=(-1,4)`
    std::string to_string() const {
        std::ostringstream os;
        os << "w=(" << (shift.wx ? "1/2" : "0") << ',' << (shift.wy ? "1/2" : "0") << ");k=" << level << ";m=("
           << m1 << ',' << m2 << ')';
        return os.str();
    }

    friend bool operator==(const DyadicCube&, const DyadicCube&) = default;
    friend bool operator<(const DyadicCube& a, const DyadicCube& b) {
        return std::tie(a.shift.wx, a.shift.wy, a.level, a.m1, a.m2) <
               std::tie(b.shift.wx, b.shift.wy, b.level, b.m1, b.m2);
    }

private:
    static Coord floor_div2(Coord v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); }
};

/// Same-center box of half the side.
inline Box half_cube(const DyadicCube& k) {
    const Box b = k.box();
    const double q = std::ldexp(1.0, k.level - 2);
    return {b.x0 + q, b.y0 + q, b.x1 - q, b.y1 - q};
}

/// Level-k cube of D^w containing the point (x, y).
inline DyadicCube cube_containing(double x, double y, int k, Shift w) {
    const auto idx = [&](double t, int wi) {
        return static_cast<Coord>(std::floor(std::ldexp(t, -k) - 0.5 * wi));
    };
    return {w, k, idx(x, w.wx), idx(y, w.wy)};
}

/// Sum over the four shifts and all level-k cubes of chi_{1/2 K}(x, y).
inline int cover_count(double x, double y, int k) {
    int count = 0;
    for (const Shift& w : kAllShifts) {
        const DyadicCube c = cube_containing(x, y, k, w);
        for (Coord dx = -1; dx <= 1; ++dx)
            for (Coord dy = -1; dy <= 1; ++dy) {
                const DyadicCube cand{w, k, c.m1 + dx, c.m2 + dy};
                if (half_cube(cand).contains(x, y)) ++count;
            }
    }
    return count;
}

inline int cover_count(Index2 p, int k, int mesh) {
    const double h = mesh_size(mesh);
    return cover_count(static_cast<double>(p.x) * h, static_cast<double>(p.y) * h, k);
}

/// Level-k cubes of D^w whose half cube meets `support`, sorted by (m1, m2).
inline std::vector<DyadicCube> cubes_meeting(const Box& support, int k, Shift w) {
    std::vector<DyadicCube> out;
    if (support.empty()) return out;
    // 1/2 K spans [2^k (m + w + 1/4), 2^k (m + w + 3/4)) per axis.
    const auto range = [&](double a0, double a1, int wi) {
        const double s0 = std::ldexp(a0, -k) - 0.5 * wi, s1 = std::ldexp(a1, -k) - 0.5 * wi;
        const Coord lo = static_cast<Coord>(std::floor(s0 - 0.75)) + 1;
        const Coord hi = static_cast<Coord>(std::ceil(s1 - 0.25)) - 1;
        return std::pair<Coord, Coord>{lo, hi};
    };
    const auto [xlo, xhi] = range(support.x0, support.x1, w.wx);
    const auto [ylo, yhi] = range(support.y0, support.y1, w.wy);
    for (Coord a = xlo; a <= xhi; ++a)
        for (Coord b = ylo; b <= yhi; ++b) out.push_back({w, k, a, b});
    return out;
}

inline Box to_box(const LatticeBox& b, int mesh) {
    const double h = mesh_size(mesh);
    return {static_cast<double>(b.x0) * h, static_cast<double>(b.y0) * h, static_cast<double>(b.x1) * h,
            static_cast<double>(b.y1) * h};
}

inline std::vector<DyadicCube> cubes_meeting(const LatticeBox& support, int mesh, int k, Shift w) {
    return cubes_meeting(to_box(support, mesh), k, w);
}

/// B subset of A, decided in integer arithmetic. Both cubes must share a shift.
inline bool contains(const DyadicCube& a, const DyadicCube& b) {
    if (!(a.shift == b.shift)) throw std::invalid_argument("cross-grid containment undefined");
    if (b.level > a.level) return false;
    const int d = a.level - b.level;
    if (d > 60) throw std::overflow_error("level gap too large for exact containment");
    // Units of 2^{b.level - 1}.
    const __int128 ax = static_cast<__int128>(a.corner_half_x()) << d;
    const __int128 ay = static_cast<__int128>(a.corner_half_y()) << d;
    const __int128 aside = static_cast<__int128>(2) << d;
    const __int128 bx = b.corner_half_x(), by = b.corner_half_y();
    return bx >= ax && bx + 2 <= ax + aside && by >= ay && by + 2 <= ay + aside;
}

/// Interiors meet (same shift not required).
inline bool overlaps(const DyadicCube& a, const DyadicCube& b) { return a.box().intersects(b.box()); }

}  // namespace rsi
