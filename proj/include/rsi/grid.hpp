// Finitely supported functions sampled on the lattice (h Z)^2, h = 2^{-m}.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsi {

using Coord = std::int64_t;

struct Index2 {
    Coord x = 0;
    Coord y = 0;
    friend bool operator==(const Index2&, const Index2&) = default;
};

/// Half-open box [x0, x1) x [y0, y1) of lattice indices. A sample at index i
/// stands for the cell [i h, (i + 1) h), so boxes double as cell unions.
struct LatticeBox {
    Coord x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    static LatticeBox from_extent(Index2 anchor, Index2 extent) {
        return {anchor.x, anchor.y, anchor.x + extent.x, anchor.y + extent.y};
    }

    bool empty() const { return x1 <= x0 || y1 <= y0; }
    Coord width() const { return empty() ? 0 : x1 - x0; }
    Coord height() const { return empty() ? 0 : y1 - y0; }
    Coord cells() const { return width() * height(); }
    Index2 anchor() const { return {x0, y0}; }

    bool contains(Coord x, Coord y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
    bool contains(const LatticeBox& o) const {
        return o.empty() || (o.x0 >= x0 && o.x1 <= x1 && o.y0 >= y0 && o.y1 <= y1);
    }

    LatticeBox intersect(const LatticeBox& o) const {
        LatticeBox r{std::max(x0, o.x0), std::max(y0, o.y0), std::min(x1, o.x1), std::min(y1, o.y1)};
        if (r.empty()) return {};
        return r;
    }
    bool intersects(const LatticeBox& o) const { return !intersect(o).empty(); }

    LatticeBox unite(const LatticeBox& o) const {
        if (empty()) return o;
        if (o.empty()) return *this;
        return {std::min(x0, o.x0), std::min(y0, o.y0), std::max(x1, o.x1), std::max(y1, o.y1)};
    }

    LatticeBox dilated(Coord r) const {
        if (empty()) return {};
        return {x0 - r, y0 - r, x1 + r, y1 + r};
    }
    LatticeBox translated(Coord dx, Coord dy) const { return {x0 + dx, y0 + dy, x1 + dx, y1 + dy}; }

    friend bool operator==(const LatticeBox& a, const LatticeBox& b) {
        if (a.empty() && b.empty()) return true;
        return a.x0 == b.x0 && a.y0 == b.y0 && a.x1 == b.x1 && a.y1 == b.y1;
    }
};

inline double mesh_size(int mesh_exp) { return std::ldexp(1.0, -mesh_exp); }

/// Dense box of samples with an anchor; reads outside the box return 0.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(int mesh_exp, LatticeBox box)
        : mesh_exp_(mesh_exp), box_(box.empty() ? LatticeBox{} : box),
          samples_(static_cast<std::size_t>(box_.cells()), 0.0) {}

    int mesh_exp() const { return mesh_exp_; }
    double h() const { return mesh_size(mesh_exp_); }
    double cell_area() const { return h() * h(); }
    const LatticeBox& box() const { return box_; }
    Index2 anchor() const { return box_.anchor(); }
    Index2 extent() const { return {box_.width(), box_.height()}; }
    bool empty() const { return box_.empty(); }

    std::vector<double>& samples() { return samples_; }
    const std::vector<double>& samples() const { return samples_; }

    double at(Coord x, Coord y) const {
        if (!box_.contains(x, y)) return 0.0;
        return samples_[offset(x, y)];
    }
    double& ref(Coord x, Coord y) {
        if (!box_.contains(x, y)) throw std::out_of_range("GridFunction::ref outside stored box");
        return samples_[offset(x, y)];
    }

    template <class F>
    void for_each(F&& fn) const {
        for (Coord y = box_.y0; y < box_.y1; ++y)
            for (Coord x = box_.x0; x < box_.x1; ++x) fn(x, y, samples_[offset(x, y)]);
    }

    double integral() const {
        double s = 0.0;
        for (double v : samples_) s += v;
        return s * cell_area();
    }
    double l1() const {
        double s = 0.0;
        for (double v : samples_) s += std::abs(v);
        return s * cell_area();
    }
    double l2() const {
        double s = 0.0;
        for (double v : samples_) s += v * v;
        return std::sqrt(s * cell_area());
    }
    double linf() const {
        double s = 0.0;
        for (double v : samples_) s = std::max(s, std::abs(v));
        return s;
    }
    bool is_zero() const {
        return std::all_of(samples_.begin(), samples_.end(), [](double v) { return v == 0.0; });
    }

    /// Smallest box holding every nonzero sample (empty for the zero function).
    LatticeBox support_box() const {
        LatticeBox r{};
        bool any = false;
        Coord xa = 0, xb = 0, ya = 0, yb = 0;
        for_each([&](Coord x, Coord y, double v) {
            if (v == 0.0) return;
            if (!any) {
                xa = xb = x;
                ya = yb = y;
                any = true;
            } else {
                xa = std::min(xa, x);
                xb = std::max(xb, x);
                ya = std::min(ya, y);
                yb = std::max(yb, y);
            }
        });
        if (any) r = {xa, ya, xb + 1, yb + 1};
        return r;
    }

    /// Copy restricted to `window` (samples outside the window are dropped).
    GridFunction restricted(const LatticeBox& window) const {
        GridFunction r(mesh_exp_, box_.intersect(window));
        r.for_each_mut([&](Coord x, Coord y, double& v) { v = at(x, y); });
        return r;
    }

    /// Same samples, stored on a larger (or different) box.
    GridFunction reboxed(const LatticeBox& b) const {
        GridFunction r(mesh_exp_, b);
        r.for_each_mut([&](Coord x, Coord y, double& v) { v = at(x, y); });
        return r;
    }

    GridFunction trimmed() const { return restricted(support_box()); }

    template <class F>
    void for_each_mut(F&& fn) {
        for (Coord y = box_.y0; y < box_.y1; ++y)
            for (Coord x = box_.x0; x < box_.x1; ++x) fn(x, y, samples_[offset(x, y)]);
    }

    /// this += c * other; the stored box grows to the union if needed.
    GridFunction& add(const GridFunction& other, double c = 1.0) {
        require_same_mesh(other);
        if (other.empty()) return *this;
        if (empty() && samples_.empty() && box_.empty()) mesh_exp_ = other.mesh_exp_;
        if (!box_.contains(other.box_)) *this = reboxed(box_.unite(other.box_));
        other.for_each([&](Coord x, Coord y, double v) { samples_[offset(x, y)] += c * v; });
        return *this;
    }
    GridFunction& operator+=(const GridFunction& o) { return add(o, 1.0); }
    GridFunction& operator-=(const GridFunction& o) { return add(o, -1.0); }
    GridFunction& operator*=(double c) {
        for (double& v : samples_) v *= c;
        return *this;
    }
    friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
    friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
    friend GridFunction operator*(double c, GridFunction a) { return a *= c; }

    GridFunction abs() const {
        GridFunction r = *this;
        for (double& v : r.samples_) v = std::abs(v);
        return r;
    }

    void require_same_mesh(const GridFunction& o) const {
        if (!o.empty() && !empty() && o.mesh_exp_ != mesh_exp_)
            throw std::invalid_argument("mesh mismatch between grid functions");
    }

private:
    std::size_t offset(Coord x, Coord y) const {
        return static_cast<std::size_t>((y - box_.y0) * box_.width() + (x - box_.x0));
    }

    int mesh_exp_ = 0;
    LatticeBox box_{};
    std::vector<double> samples_;
};

/// Pointwise max |a - b| over the union of both boxes.
inline double max_abs_diff(const GridFunction& a, const GridFunction& b) {
    const LatticeBox u = a.box().unite(b.box());
    double m = 0.0;
    for (Coord y = u.y0; y < u.y1; ++y)
        for (Coord x = u.x0; x < u.x1; ++x) m = std::max(m, std::abs(a.at(x, y) - b.at(x, y)));
    return m;
}

}  // namespace rsi
