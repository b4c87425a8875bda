// Frozen calibration constants, stored as `key = value` with `#` provenance lines.
#pragma once

#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rsi/lab/config.hpp"

namespace rsi::lab {

struct Calibration {
    double r_max = 0.0;        // weak-type ratio bound
    double pointwise_c = 0.0;  // T_{Omega,*} vs T_* control constant
    double c0 = 0.0;           // F-level threshold constant
    std::vector<std::string> provenance;
    std::map<std::string, double> observed;  // raw measurements behind the constants
};

inline Calibration read_calibration(std::istream& is) {
    Calibration c;
    bool have_r = false, have_p = false, have_c = false;
    std::string line;
    while (std::getline(is, line)) {
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            c.provenance.push_back(detail::trim(t.substr(1)));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("calibration: expected key = value");
        const std::string key = detail::trim(t.substr(0, eq));
        const double v = detail::parse_number<double>(key, t.substr(eq + 1));
        if (key == "r_max") c.r_max = v, have_r = true;
        else if (key == "pointwise_c") c.pointwise_c = v, have_p = true;
        else if (key == "c0") c.c0 = v, have_c = true;
        else c.observed[key] = v;
    }
    if (!have_r || !have_p || !have_c) throw ConfigError("calibration: r_max, pointwise_c and c0 are all required");
    return c;
}

inline Calibration load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open calibration file '" + path + "'");
    return read_calibration(in);
}

inline void write_calibration(std::ostream& os, const Calibration& c) {
    for (const std::string& p : c.provenance) os << "# " << p << '\n';
    os.precision(17);
    os << "r_max = " << c.r_max << '\n';
    os << "pointwise_c = " << c.pointwise_c << '\n';
    os << "c0 = " << c.c0 << '\n';
    for (const auto& [k, v] : c.observed) os << k << " = " << v << '\n';
}

}  // namespace rsi::lab
