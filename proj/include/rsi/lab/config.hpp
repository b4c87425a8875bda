// Experiment configuration: flat `key = value` files, kernel specs and the
// lambda grid.
#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsi/dyadic.hpp"
#include "rsi/kernel.hpp"
#include "rsi/sphere.hpp"

#ifndef RSI_CALIBRATION_FILE
#define RSI_CALIBRATION_FILE "data/calibration.cfg"
#endif

namespace rsi::lab {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const std::string t = trim(text);
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw ConfigError("config: bad value for " + key + ": '" + text + "'");
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError("config: bad value for " + key + ": '" + text + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
    std::vector<T> out;
    for (const std::string& item : split(text, ',')) out.push_back(parse_number<T>(key, item));
    return out;
}

}  // namespace detail

/// Omega from a spec string: `cos`, `sin`, `zero`, `sign:<seed>`, `random:<seed>`,
/// `arcs:<v1,...,vn>` (n equal blocks of arcs). Projected onto mean zero unless
/// `project` is false.
inline SphereFunction parse_kernel_spec(const std::string& spec, int arc_count, bool project = true) {
    const auto colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string{} : spec.substr(colon + 1);
    const auto need_arg = [&] {
        if (colon == std::string::npos || arg.empty()) throw ConfigError("kernel spec '" + spec + "' needs an argument");
    };
    SphereFunction om = SphereFunction::zero(arc_count);
    if (head == "cos" && colon == std::string::npos) {
        om = SphereFunction::cosine(arc_count);
    } else if (head == "sin" && colon == std::string::npos) {
        om = SphereFunction::sine(arc_count);
    } else if (head == "zero" && colon == std::string::npos) {
        om = SphereFunction::zero(arc_count);
    } else if (head == "sign") {
        need_arg();
        om = SphereFunction::sign_pattern(arc_count, detail::parse_number<std::uint64_t>("kernel", arg));
    } else if (head == "random") {
        need_arg();
        om = SphereFunction::random(arc_count, detail::parse_number<std::uint64_t>("kernel", arg));
    } else if (head == "arcs") {
        need_arg();
        const std::vector<double> vals = detail::parse_list<double>("kernel", arg);
        const int n = static_cast<int>(vals.size());
        if (n > arc_count) throw ConfigError("kernel spec '" + spec + "' has more values than arcs");
        std::vector<double> v(static_cast<std::size_t>(arc_count));
        for (int a = 0; a < arc_count; ++a) v[a] = vals[static_cast<std::size_t>(a * n / arc_count)];
        om = SphereFunction(std::move(v));
    } else {
        throw ConfigError("unknown kernel spec '" + spec + "'");
    }
    return project ? project_cancellation(om) : om;
}

struct ExperimentConfig {
    int mesh = 9;
    std::optional<int> k_min;  // default: finest resolvable level
    int k_max = 2;
    std::string kernel = "cos";
    std::string rough_kernel = "random:1";
    bool project = true;
    int arc_count = 1024;
    std::vector<double> lambda_grid;  // explicit grid; generated when empty
    int lambda_count = 32;
    double lambda_decades = 4.0;
    double lambda_center = 0.0;  // 0: median value of T_* f above round-off
    std::vector<int> s_list = {4, 6, 8, 10};
    int tower_s = 3;
    double gamma = 0.25;
    double eta = 0.05;
    std::optional<double> c0;  // default: calibration file
    double alpha = 1.0;
    std::uint64_t seed = 1;
    int dilate = 8;
    std::string out = ".";
    std::string calibration = RSI_CALIBRATION_FILE;

    LevelRange levels() const { return {k_min.value_or(min_resolvable_level(mesh)), k_max}; }

    SphereFunction omega() const { return parse_kernel_spec(kernel, arc_count, project); }
    SphereFunction rough_omega() const { return parse_kernel_spec(rough_kernel, arc_count, project); }

    void set(const std::string& key, const std::string& value) {
        using namespace detail;
        if (key == "mesh") mesh = parse_number<int>(key, value);
        else if (key == "k_min") k_min = parse_number<int>(key, value);
        else if (key == "k_max") k_max = parse_number<int>(key, value);
        else if (key == "kernel") kernel = trim(value);
        else if (key == "rough_kernel") rough_kernel = trim(value);
        else if (key == "project") project = parse_bool(key, value);
        else if (key == "arc_count") arc_count = parse_number<int>(key, value);
        else if (key == "lambda_grid") lambda_grid = parse_list<double>(key, value);
        else if (key == "lambda_count") lambda_count = parse_number<int>(key, value);
        else if (key == "lambda_decades") lambda_decades = parse_number<double>(key, value);
        else if (key == "lambda_center") lambda_center = parse_number<double>(key, value);
        else if (key == "s_list") s_list = parse_list<int>(key, value);
        else if (key == "tower_s") tower_s = parse_number<int>(key, value);
        else if (key == "gamma") gamma = parse_number<double>(key, value);
        else if (key == "eta") eta = parse_number<double>(key, value);
        else if (key == "c0") c0 = parse_number<double>(key, value);
        else if (key == "alpha") alpha = parse_number<double>(key, value);
        else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
        else if (key == "dilate") dilate = parse_number<int>(key, value);
        else if (key == "out") out = trim(value);
        else if (key == "calibration") calibration = trim(value);
        else throw ConfigError("config: unknown key '" + key + "'");
    }

    /// Checks every constraint; throws ConfigError naming the first violation.
    void validate() const {
        if (mesh < 3 || mesh > 11) throw ConfigError("config: mesh must lie in [3, 11]");
        const LevelRange lv = levels();
        if (lv.lo < min_resolvable_level(mesh))
            throw ConfigError("config: k_min = " + std::to_string(lv.lo) + " is below the resolvable level " +
                              std::to_string(min_resolvable_level(mesh)) + " for mesh " + std::to_string(mesh));
        if (lv.hi < lv.lo) throw ConfigError("config: k_max must be >= k_min");
        if (arc_count < 4 || !std::has_single_bit(static_cast<unsigned>(arc_count)))
            throw ConfigError("config: arc_count must be a power of two >= 4");
        if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("config: gamma must lie in (0, 1)");
        if (!(eta > 0.0)) throw ConfigError("config: eta must be positive");
        if (!(alpha > 0.0)) throw ConfigError("config: alpha must be positive");
        if (c0 && !(*c0 > 0.0)) throw ConfigError("config: c0 must be positive");
        if (dilate < 1) throw ConfigError("config: dilate must be >= 1");
        if (s_list.empty()) throw ConfigError("config: s_list is empty");
        for (std::size_t i = 0; i < s_list.size(); ++i) {
            if (s_list[i] < 1 || s_list[i] > 16) throw ConfigError("config: s values must lie in [1, 16]");
            if (i > 0 && s_list[i] <= s_list[i - 1]) throw ConfigError("config: s_list must be strictly increasing");
        }
        if (tower_s < 2 || tower_s > 16) throw ConfigError("config: tower_s must lie in [2, 16]");
        const double w = 2.0 * std::numbers::pi / arc_count;
        for (int s : s_list)
            if (w > std::exp2(-s * gamma - 4.0))
                throw ConfigError("config: arc_count too small to resolve the direction net at s = " +
                                  std::to_string(s));
        if (lambda_grid.empty()) {
            if (lambda_count < 2) throw ConfigError("config: lambda_count must be >= 2");
            if (!(lambda_decades > 0.0)) throw ConfigError("config: lambda_decades must be positive");
            if (lambda_center < 0.0) throw ConfigError("config: lambda_center must be positive");
        } else {
            for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
                if (!(lambda_grid[i] > 0.0)) throw ConfigError("config: lambda grid must be positive");
                if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1]))
                    throw ConfigError("config: lambda grid must be sorted increasing");
            }
        }
        parse_kernel_spec(kernel, arc_count, project);
        parse_kernel_spec(rough_kernel, arc_count, project);
    }
};

/// Reads `key = value` lines; `#` starts a comment.
inline void read_config(std::istream& is, ExperimentConfig& cfg) {
    std::string line;
    int n = 0;
    while (std::getline(is, line)) {
        ++n;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(n) + ": expected key = value");
        cfg.set(detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    ExperimentConfig cfg;
    read_config(in, cfg);
    return cfg;
}

/// Resolved radii of the level range: T_* sees |x| between 2^{k_min-4} and 2^{k_max-2}.
inline double inner_radius(LevelRange lv) { return std::exp2(lv.lo - 4); }
inline double outer_radius(LevelRange lv) { return std::exp2(lv.hi - 2); }

/// Increasing lambda grid: the explicit grid if given, else `lambda_count`
/// points over `lambda_decades` around lambda_center, or around `typical` when
/// lambda_center is 0.
inline std::vector<double> lambda_grid(const ExperimentConfig& cfg, double typical) {
    if (!cfg.lambda_grid.empty()) return cfg.lambda_grid;
    const double centre = cfg.lambda_center > 0.0 ? cfg.lambda_center : typical;
    std::vector<double> g(static_cast<std::size_t>(cfg.lambda_count));
    const double span = cfg.lambda_decades;
    for (int i = 0; i < cfg.lambda_count; ++i)
        g[i] = centre * std::pow(10.0, -0.5 * span + span * i / (cfg.lambda_count - 1));
    return g;
}

}  // namespace rsi::lab
