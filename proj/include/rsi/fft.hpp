// Zero-padded linear convolution and frequency multipliers over FFTW.
#pragma once

#include <fftw3.h>

#include <bit>
#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>

#include "rsi/grid.hpp"

namespace rsi {

namespace detail {

template <class T>
struct FftwFree {
    void operator()(T* p) const { fftw_free(p); }
};

using RealBuf = std::unique_ptr<double[], FftwFree<double>>;
using SpecBuf = std::unique_ptr<fftw_complex[], FftwFree<fftw_complex>>;

inline RealBuf alloc_real(std::size_t n) {
    return RealBuf(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
}
inline SpecBuf alloc_spec(std::size_t n) {
    return SpecBuf(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

/// Process-wide plan cache. FFTW's planner is not reentrant, execution is.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache c;
        return c;
    }

    std::pair<fftw_plan, fftw_plan> get(int nx, int ny) {
        std::lock_guard lock(mu_);
        auto it = plans_.find({nx, ny});
        if (it != plans_.end()) return it->second;
        const std::size_t nr = static_cast<std::size_t>(nx) * ny;
        const std::size_t nc = static_cast<std::size_t>(ny) * (nx / 2 + 1);
        RealBuf r = alloc_real(nr);
        SpecBuf c = alloc_spec(nc);
        fftw_plan fwd = fftw_plan_dft_r2c_2d(ny, nx, r.get(), c.get(), FFTW_ESTIMATE);
        fftw_plan inv = fftw_plan_dft_c2r_2d(ny, nx, c.get(), r.get(), FFTW_ESTIMATE);
        if (!fwd || !inv) throw std::runtime_error("fftw planning failed");
        return plans_[{nx, ny}] = {fwd, inv};
    }

    ~PlanCache() {
        for (auto& [k, p] : plans_) {
            fftw_destroy_plan(p.first);
            fftw_destroy_plan(p.second);
        }
    }

private:
    std::mutex mu_;
    std::map<std::pair<int, int>, std::pair<fftw_plan, fftw_plan>> plans_;
};

inline int next_pow2(Coord n) { return static_cast<int>(std::bit_ceil(static_cast<std::uint64_t>(std::max<Coord>(n, 1)))); }

}  // namespace detail

/// Real 2-D array of size ny x nx and its half spectrum.
class PaddedField {
public:
    PaddedField(int nx, int ny)
        : nx_(nx), ny_(ny), real_(detail::alloc_real(static_cast<std::size_t>(nx) * ny)),
          spec_(detail::alloc_spec(static_cast<std::size_t>(ny) * (nx / 2 + 1))) {
        std::memset(real_.get(), 0, sizeof(double) * static_cast<std::size_t>(nx) * ny);
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int nxc() const { return nx_ / 2 + 1; }
    double* real() { return real_.get(); }
    fftw_complex* spec() { return spec_.get(); }
    const fftw_complex* spec() const { return spec_.get(); }

    /// Writes g into the array with its box anchored at `origin` (wrapped mod n).
    void load(const GridFunction& g, Index2 origin) {
        std::memset(real_.get(), 0, sizeof(double) * static_cast<std::size_t>(nx_) * ny_);
        g.for_each([&](Coord x, Coord y, double v) {
            const Coord ix = wrap(x - origin.x, nx_), iy = wrap(y - origin.y, ny_);
            real_[static_cast<std::size_t>(iy * nx_ + ix)] = v;
        });
    }

    void forward() { fftw_execute_dft_r2c(detail::PlanCache::instance().get(nx_, ny_).first, real_.get(), spec_.get()); }
    void inverse() { fftw_execute_dft_c2r(detail::PlanCache::instance().get(nx_, ny_).second, spec_.get(), real_.get()); }

    /// Reads the real array into `box` (relative to `origin`), scaling by `c`.
    GridFunction extract(int mesh, const LatticeBox& box, Index2 origin, double c) const {
        GridFunction out(mesh, box);
        out.for_each_mut([&](Coord x, Coord y, double& v) {
            const Coord ix = wrap(x - origin.x, nx_), iy = wrap(y - origin.y, ny_);
            v = c * real_[static_cast<std::size_t>(iy * nx_ + ix)];
        });
        return out;
    }

    /// Signed frequency index of column / row.
    static int freq(int i, int n) { return i <= n / 2 ? i : i - n; }

private:
    static Coord wrap(Coord v, int n) {
        Coord r = v % n;
        return r < 0 ? r + n : r;
    }

    int nx_, ny_;
    detail::RealBuf real_;
    detail::SpecBuf spec_;
};

/// Linear convolution (a * b)(x) = sum_y a(x - y) b(y) h^2 on the Minkowski sum
/// of the two boxes. Padding removes all wraparound.
inline GridFunction convolve(const GridFunction& a, const GridFunction& b) {
    if (a.mesh_exp() != b.mesh_exp() && !a.empty() && !b.empty())
        throw std::invalid_argument("mesh mismatch between grid functions");
    const int mesh = a.empty() ? b.mesh_exp() : a.mesh_exp();
    if (a.empty() || b.empty()) return GridFunction(mesh, {});
    const LatticeBox out{a.box().x0 + b.box().x0, a.box().y0 + b.box().y0, a.box().x1 + b.box().x1 - 1,
                         a.box().y1 + b.box().y1 - 1};
    const int nx = detail::next_pow2(out.width()), ny = detail::next_pow2(out.height());
    PaddedField fa(nx, ny), fb(nx, ny);
    fa.load(a, a.anchor());
    fb.load(b, b.anchor());
    fa.forward();
    fb.forward();
    const std::size_t nc = static_cast<std::size_t>(ny) * fa.nxc();
    for (std::size_t i = 0; i < nc; ++i) {
        const std::complex<double> p =
            std::complex<double>(fa.spec()[i][0], fa.spec()[i][1]) * std::complex<double>(fb.spec()[i][0], fb.spec()[i][1]);
        fa.spec()[i][0] = p.real();
        fa.spec()[i][1] = p.imag();
    }
    fa.inverse();
    const double scale = a.cell_area() / (static_cast<double>(nx) * ny);
    return fa.extract(mesh, out, {a.box().x0 + b.box().x0, a.box().y0 + b.box().y0}, scale);
}

/// O(n^4) reference convolution.
inline GridFunction convolve_direct(const GridFunction& a, const GridFunction& b) {
    const int mesh = a.empty() ? b.mesh_exp() : a.mesh_exp();
    if (a.empty() || b.empty()) return GridFunction(mesh, {});
    const LatticeBox out{a.box().x0 + b.box().x0, a.box().y0 + b.box().y0, a.box().x1 + b.box().x1 - 1,
                         a.box().y1 + b.box().y1 - 1};
    GridFunction r(mesh, out);
    const double w = a.cell_area();
    a.for_each([&](Coord ax, Coord ay, double av) {
        if (av == 0.0) return;
        b.for_each([&](Coord bx, Coord by, double bv) { r.ref(ax + bx, ay + by) += av * bv * w; });
    });
    return r;
}

/// Convolution against one fixed kernel, reusing its spectrum per padded size.
class KernelConvolver {
public:
    explicit KernelConvolver(GridFunction kernel) : kernel_(std::move(kernel)) {}

    const GridFunction& kernel() const { return kernel_; }

    GridFunction operator()(const GridFunction& g) {
        const int mesh = kernel_.empty() ? g.mesh_exp() : kernel_.mesh_exp();
        if (kernel_.empty() || g.empty()) return GridFunction(mesh, {});
        if (g.mesh_exp() != kernel_.mesh_exp()) throw std::invalid_argument("mesh mismatch between grid functions");
        const LatticeBox& a = kernel_.box();
        const LatticeBox& b = g.box();
        const LatticeBox out{a.x0 + b.x0, a.y0 + b.y0, a.x1 + b.x1 - 1, a.y1 + b.y1 - 1};
        const int nx = detail::next_pow2(out.width()), ny = detail::next_pow2(out.height());
        const PaddedField& ks = spectrum(nx, ny);
        PaddedField fb(nx, ny);
        fb.load(g, g.anchor());
        fb.forward();
        const std::size_t nc = static_cast<std::size_t>(ny) * fb.nxc();
        for (std::size_t i = 0; i < nc; ++i) {
            const std::complex<double> p = std::complex<double>(ks.spec()[i][0], ks.spec()[i][1]) *
                                           std::complex<double>(fb.spec()[i][0], fb.spec()[i][1]);
            fb.spec()[i][0] = p.real();
            fb.spec()[i][1] = p.imag();
        }
        fb.inverse();
        const double scale = kernel_.cell_area() / (static_cast<double>(nx) * ny);
        return fb.extract(mesh, out, {a.x0 + b.x0, a.y0 + b.y0}, scale);
    }

private:
    const PaddedField& spectrum(int nx, int ny) {
        std::lock_guard lock(mu_);
        auto it = cache_.find({nx, ny});
        if (it != cache_.end()) return *it->second;
        auto f = std::make_unique<PaddedField>(nx, ny);
        f->load(kernel_, kernel_.anchor());
        f->forward();
        return *(cache_[{nx, ny}] = std::move(f));
    }

    GridFunction kernel_;
    std::mutex mu_;
    std::map<std::pair<int, int>, std::unique_ptr<PaddedField>> cache_;
};

/// Multiplies the spectrum of g by m(xi1, xi2) (real or complex valued),
/// frequencies in cycles per unit length on a padded grid of at least twice
/// g's extent. The output covers one full period of that grid, centered on
/// g's box.
template <class Symbol>
GridFunction apply_multiplier(const GridFunction& g, Symbol&& m, int pad_factor = 2) {
    if (g.empty()) return g;
    const int nx = detail::next_pow2(pad_factor * g.box().width());
    const int ny = detail::next_pow2(pad_factor * g.box().height());
    PaddedField f(nx, ny);
    f.load(g, g.anchor());
    f.forward();
    const double h = g.h();
    for (int r = 0; r < ny; ++r) {
        const double xi2 = PaddedField::freq(r, ny) / (ny * h);
        for (int c = 0; c < f.nxc(); ++c) {
            const double xi1 = c / (nx * h);
            fftw_complex& z = f.spec()[static_cast<std::size_t>(r) * f.nxc() + c];
            const std::complex<double> v = std::complex<double>(z[0], z[1]) * m(xi1, xi2);
            z[0] = v.real();
            z[1] = v.imag();
        }
    }
    f.inverse();
    const Coord px = (nx - g.box().width()) / 2, py = (ny - g.box().height()) / 2;
    const LatticeBox out{g.box().x0 - px, g.box().y0 - py, g.box().x0 - px + nx, g.box().y0 - py + ny};
    return f.extract(g.mesh_exp(), out, g.anchor(), 1.0 / (static_cast<double>(nx) * ny));
}

}  // namespace rsi
