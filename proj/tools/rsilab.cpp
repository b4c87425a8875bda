// rsilab: command-line driver for the lab experiments.
#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "rsi/lab/experiments.hpp"

namespace {

using namespace rsi::lab;

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> mesh;
    std::optional<std::string> kernel;
    bool no_project = false;
};

ExperimentConfig resolve(const Flags& f) {
    ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
    if (f.seed) cfg.seed = *f.seed;
    if (f.out) cfg.out = *f.out;
    if (f.mesh) cfg.mesh = *f.mesh;
    if (f.kernel) cfg.kernel = *f.kernel;
    if (f.no_project) cfg.project = false;
    cfg.validate();
    return cfg;
}

int finish(const ExperimentReport& rep, const ExperimentConfig& cfg) {
    write_outputs(rep, cfg.out);
    int failed = 0;
    for (const rsi::Check& c : rep.summary.checks) {
        if (c.pass) continue;
        ++failed;
        std::cerr << "FAIL " << c.name << ": measured " << c.measured << ", threshold " << c.threshold << '\n';
    }
    for (const std::string& n : rep.notes) std::cout << "note: " << n << '\n';
    if (rep.delta_hat) std::cout << "delta_hat = " << *rep.delta_hat << '\n';
    std::cout << rep.name << ": " << rep.summary.checks.size() - failed << "/" << rep.summary.checks.size()
              << " assertions pass, outputs in " << cfg.out << '\n';
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical lab for the maximal truncated rough singular integral"};
    app.require_subcommand(1);
    app.fallthrough();
    Flags flags;
    app.add_option("--config", flags.config, "flat key = value config file");
    app.add_option("--seed", flags.seed, "base seed");
    app.add_option("--out", flags.out, "output directory");
    app.add_option("--mesh", flags.mesh, "mesh exponent m (h = 2^-m)");
    app.add_option("--kernel", flags.kernel, "Omega spec: cos, sin, zero, sign:<seed>, random:<seed>, arcs:<v,...>");
    app.add_flag("--no-project", flags.no_project, "skip the mean-zero projection of Omega");

    const char* names[] = {"verify", "weak11", "decay", "ortho", "calibrate", "kernel-dump"};
    const char* help[] = {"run every module invariant suite",
                          "weak-type ratio over the input suite and lambda grid",
                          "L(s) decay of the small-Omega part and the L1 chain",
                          "per-partition sign-pattern maxima and Rademacher-Menshov",
                          "recompute the frozen calibration constants",
                          "kernel, sphere and direction-net samples"};
    for (int i = 0; i < 6; ++i) app.add_subcommand(names[i], help[i]);

    CLI11_PARSE(app, argc, argv);
    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        const ExperimentConfig cfg = resolve(flags);
        if (cmd == "verify") return finish(run_verify(cfg, calibration_for(cfg)), cfg);
        if (cmd == "weak11") return finish(run_weak11(cfg, calibration_for(cfg)), cfg);
        if (cmd == "decay") return finish(run_decay(cfg), cfg);
        if (cmd == "ortho") return finish(run_orthogonality(cfg, calibration_for(cfg)), cfg);
        if (cmd == "calibrate") return finish(run_calibrate(cfg), cfg);
        return finish(run_kernel_dump(cfg), cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
