// Named measured-vs-threshold checks shared by the verification reports.
#pragma once

#include <algorithm>
#include <ostream>
#include <string>
#include <vector>

namespace rsi {

struct Check {
    std::string name;
    double measured = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct Report {
    std::vector<Check> checks;

    void add(std::string name, double measured, double threshold, bool pass) {
        checks.push_back({std::move(name), measured, threshold, pass});
    }
    /// measured <= threshold
    void at_most(std::string name, double measured, double threshold) {
        add(std::move(name), measured, threshold, measured <= threshold);
    }
    /// measured > threshold
    void above(std::string name, double measured, double threshold) {
        add(std::move(name), measured, threshold, measured > threshold);
    }
    void append(const Report& o, const std::string& prefix = {}) {
        for (const Check& c : o.checks) checks.push_back({prefix + c.name, c.measured, c.threshold, c.pass});
    }
    bool all_pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
    }
    const Check* find(const std::string& name) const {
        for (const Check& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

}  // namespace rsi
