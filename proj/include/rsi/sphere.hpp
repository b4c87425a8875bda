// Angular part of a homogeneous kernel on the unit circle, piecewise
// constant on equal arcs.
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rsi {

class SphereFunction {
public:
    SphereFunction() = default;

    explicit SphereFunction(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty() || !std::has_single_bit(values_.size()))
            throw std::invalid_argument("arc_count must be a positive power of two");
        for (double v : values_)
            if (!std::isfinite(v)) throw std::invalid_argument("sphere function values must be finite");
    }

    static SphereFunction constant(int arc_count, double c) {
        return SphereFunction(std::vector<double>(static_cast<std::size_t>(arc_count), c));
    }
    static SphereFunction zero(int arc_count) { return constant(arc_count, 0.0); }

    /// cos at arc midpoints; the second half is the exact negation of the first
    /// so the kernel is odd on a symmetric lattice.
    static SphereFunction cosine(int arc_count) { return odd_from([](double t) { return std::cos(t); }, arc_count); }
    static SphereFunction sine(int arc_count) { return odd_from([](double t) { return std::sin(t); }, arc_count); }

    /// +-1 on 16 equal blocks of arcs (fewer if arc_count < 16), signs drawn from `seed`.
    static SphereFunction sign_pattern(int arc_count, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        const int blocks = std::min(arc_count, 16);
        std::vector<double> signs(static_cast<std::size_t>(blocks));
        for (double& s : signs) s = (rng() & 1U) ? 1.0 : -1.0;
        std::vector<double> v(static_cast<std::size_t>(arc_count));
        for (int a = 0; a < arc_count; ++a) v[a] = signs[static_cast<std::size_t>(a * blocks / arc_count)];
        return SphereFunction(std::move(v));
    }

    /// Heavy-tailed seeded values: sign * u^{-0.6}, u uniform in (0, 1].
    /// Integrable with a nontrivial L log L profile.
    static SphereFunction random(int arc_count, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::vector<double> v(static_cast<std::size_t>(arc_count));
        for (double& x : v) {
            const double u = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
            const double mag = std::pow(u, -0.6);
            x = (rng() & 1U) ? mag : -mag;
        }
        return SphereFunction(std::move(v));
    }

    int arc_count() const { return static_cast<int>(values_.size()); }
    double arc_width() const { return 2.0 * std::numbers::pi / static_cast<double>(values_.size()); }
    double arc_midpoint(int a) const { return (a + 0.5) * arc_width(); }
    double value(int arc) const { return values_[static_cast<std::size_t>(arc)]; }
    const std::vector<double>& values() const { return values_; }

    /// Arc containing direction (dx, dy) != 0. Antipodal directions land on arcs
    /// exactly arc_count/2 apart.
    int arc_of_direction(double dx, double dy) const { return arc_index(dx, dy, arc_count()); }

    double at_direction(double dx, double dy) const { return values_[static_cast<std::size_t>(arc_of_direction(dx, dy))]; }

    static int arc_index(double dx, double dy, int arc_count) {
        if (dy < 0.0 || (dy == 0.0 && dx < 0.0)) return arc_index(-dx, -dy, arc_count) + arc_count / 2;
        const double t = std::atan2(dy, dx);  // in [0, pi)
        const double w = 2.0 * std::numbers::pi / arc_count;
        int a = static_cast<int>(std::floor(t / w));
        return std::clamp(a, 0, std::max(arc_count / 2 - 1, 0));
    }

    friend bool operator==(const SphereFunction&, const SphereFunction&) = default;

private:
    template <class F>
    static SphereFunction odd_from(F f, int arc_count) {
        std::vector<double> v(static_cast<std::size_t>(arc_count));
        const double w = 2.0 * std::numbers::pi / arc_count;
        for (int a = 0; a < arc_count / 2; ++a) {
            v[a] = f((a + 0.5) * w);
            v[a + arc_count / 2] = -v[a];
        }
        if (arc_count == 1) v[0] = 0.0;
        return SphereFunction(std::move(v));
    }

    std::vector<double> values_;
};

/// Omega minus its mean: the arc-weighted sum of the result vanishes.
inline SphereFunction project_cancellation(const SphereFunction& omega) {
    const auto& v = omega.values();
    long double sum = 0.0L;
    for (double x : v) sum += x;
    const double mean = static_cast<double>(sum / static_cast<long double>(v.size()));
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - mean;
    return SphereFunction(std::move(out));
}

inline double l1_norm(const SphereFunction& omega) {
    double s = 0.0;
    for (double x : omega.values()) s += std::abs(x);
    return s * omega.arc_width();
}

inline double linf_norm(const SphereFunction& omega) {
    double s = 0.0;
    for (double x : omega.values()) s = std::max(s, std::abs(x));
    return s;
}

/// int |Omega| log(2 + |Omega|)
inline double llogl_norm(const SphereFunction& omega) {
    double s = 0.0;
    for (double x : omega.values()) s += std::abs(x) * std::log(2.0 + std::abs(x));
    return s * omega.arc_width();
}

/// The kernel strength constant: ||Omega||_{L log L} + int |Omega| (1 + log+(|Omega| / ||Omega||_1)).
/// Zero for the zero kernel.
inline double c_omega(const SphereFunction& omega) {
    const double l1 = l1_norm(omega);
    if (l1 == 0.0) return 0.0;
    double s = 0.0;
    for (double x : omega.values()) {
        const double a = std::abs(x);
        s += a * (1.0 + std::max(0.0, std::log(a / l1)));
    }
    return llogl_norm(omega) + s * omega.arc_width();
}

/// Size split threshold 2^{eta s} ||Omega||_1.
inline double split_threshold(const SphereFunction& omega, int s, double eta) {
    return std::exp2(eta * s) * l1_norm(omega);
}

/// (Omega_1, Omega_2): Omega_1 keeps the arcs with |Omega| >= 2^{eta s} ||Omega||_1.
inline std::pair<SphereFunction, SphereFunction> split_omega(const SphereFunction& omega, int s, double eta) {
    if (s < 1) throw std::invalid_argument("split_omega: s must be >= 1");
    if (!(eta > 0.0)) throw std::invalid_argument("split_omega: eta must be positive");
    const double thr = split_threshold(omega, s, eta);
    std::vector<double> big(omega.values().size(), 0.0), small = omega.values();
    if (thr > 0.0) {
        for (std::size_t i = 0; i < small.size(); ++i) {
            if (std::abs(small[i]) >= thr) {
                big[i] = small[i];
                small[i] = 0.0;
            }
        }
    }
    return {SphereFunction(std::move(big)), SphereFunction(std::move(small))};
}

}  // namespace rsi
