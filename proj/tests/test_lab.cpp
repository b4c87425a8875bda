#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rsi/lab/experiments.hpp"

using namespace rsi;
using namespace rsi::lab;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.mesh = 7;
    return cfg;
}

ExperimentConfig parse(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    read_config(is, cfg);
    return cfg;
}

void expect_invalid(const std::string& text, const std::string& fragment) {
    try {
        parse(text).validate();
        ADD_FAILURE() << "no error for: " << text;
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
}

}  // namespace

TEST(LabConfig, DefaultsValidate) {
    const ExperimentConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.levels().lo, min_resolvable_level(9));
    EXPECT_EQ(cfg.levels().hi, 2);
}

TEST(LabConfig, ParsesKeysAndComments) {
    const ExperimentConfig cfg = parse(
        "# comment\n"
        "mesh = 8   # trailing\n"
        "\n"
        "kernel = random:7\n"
        "s_list = 3, 5, 9\n"
        "project = false\n"
        "c0 = 0.125\n"
        "seed = 42\n");
    EXPECT_EQ(cfg.mesh, 8);
    EXPECT_EQ(cfg.kernel, "random:7");
    EXPECT_EQ(cfg.s_list, (std::vector<int>{3, 5, 9}));
    EXPECT_FALSE(cfg.project);
    ASSERT_TRUE(cfg.c0.has_value());
    EXPECT_DOUBLE_EQ(*cfg.c0, 0.125);
    EXPECT_EQ(cfg.seed, 42u);
    EXPECT_NO_THROW(cfg.validate());
}

TEST(LabConfig, RejectsMalformedInput) {
    EXPECT_THROW(parse("nonsense = 1\n"), ConfigError);
    EXPECT_THROW(parse("mesh = nine\n"), ConfigError);
    EXPECT_THROW(parse("mesh 9\n"), ConfigError);
    EXPECT_THROW(parse("project = maybe\n"), ConfigError);
    EXPECT_THROW(parse("s_list = 4,,6\n"), ConfigError);
}

TEST(LabConfig, ValidationNamesTheViolation) {
    expect_invalid("mesh = 2\n", "mesh");
    expect_invalid("k_min = -3\n", "resolvable");
    expect_invalid("k_min = 2\nk_max = 1\n", "k_max");
    expect_invalid("arc_count = 1000\n", "arc_count");
    expect_invalid("arc_count = 64\n", "direction net");
    expect_invalid("gamma = 1\n", "gamma");
    expect_invalid("eta = 0\n", "eta");
    expect_invalid("c0 = -1\n", "c0");
    expect_invalid("s_list = 4, 4, 6\n", "increasing");
    expect_invalid("s_list = 0, 4\n", "[1, 16]");
    expect_invalid("lambda_grid = 1, 0.5\n", "lambda");
    expect_invalid("kernel = wobble\n", "unknown kernel spec");
    expect_invalid("rough_kernel = random:\n", "needs an argument");
}

TEST(LabConfig, KernelSpecs) {
    const SphereFunction c = parse_kernel_spec("cos", 256);
    double mean = 0.0;
    for (double v : c.values()) mean += v;
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_EQ(parse_kernel_spec("random:3", 256), parse_kernel_spec("random:3", 256));
    EXPECT_FALSE(parse_kernel_spec("random:3", 256) == parse_kernel_spec("random:4", 256));
    EXPECT_EQ(l1_norm(parse_kernel_spec("zero", 64)), 0.0);
    const SphereFunction a = parse_kernel_spec("arcs:2,0", 8, false);
    EXPECT_EQ(a.value(0), 2.0);
    EXPECT_EQ(a.value(3), 2.0);
    EXPECT_EQ(a.value(4), 0.0);
    const SphereFunction p = parse_kernel_spec("arcs:2,0", 8);
    EXPECT_EQ(p.value(0), 1.0);
    EXPECT_EQ(p.value(7), -1.0);
    EXPECT_THROW(parse_kernel_spec("sign", 64), ConfigError);
    EXPECT_THROW(parse_kernel_spec("cos:1", 64), ConfigError);
    EXPECT_THROW(parse_kernel_spec("arcs:1,2,3", 2), ConfigError);
}

TEST(LabConfig, LambdaGridSpansDecadesAroundCentre) {
    ExperimentConfig cfg;
    const std::vector<double> g = lambda_grid(cfg, 3.0);
    ASSERT_EQ(g.size(), 32u);
    EXPECT_NEAR(g.back() / g.front(), 1e4, 1e-8);
    EXPECT_NEAR(std::sqrt(g.front() * g.back()), 3.0, 1e-12);
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
    cfg.lambda_center = 5.0;
    EXPECT_NEAR(std::sqrt(lambda_grid(cfg, 3.0).front() * lambda_grid(cfg, 3.0).back()), 5.0, 1e-12);
    cfg.lambda_grid = {1.0, 2.0};
    EXPECT_EQ(lambda_grid(cfg, 3.0), cfg.lambda_grid);
}

TEST(LabCalibration, RoundTrip) {
    Calibration c;
    c.r_max = 0.1 + 0.2;
    c.pointwise_c = 1.0 / 3.0;
    c.c0 = 0.015625;
    c.provenance = {"line one", "line two"};
    c.observed = {{"observed_x", 2.0 / 7.0}};
    std::stringstream ss;
    write_calibration(ss, c);
    const Calibration d = read_calibration(ss);
    EXPECT_EQ(d.r_max, c.r_max);
    EXPECT_EQ(d.pointwise_c, c.pointwise_c);
    EXPECT_EQ(d.c0, c.c0);
    EXPECT_EQ(d.provenance, c.provenance);
    EXPECT_EQ(d.observed, c.observed);
}

TEST(LabCalibration, MissingConstantRejected) {
    std::istringstream is("r_max = 1\nc0 = 0.1\n");
    EXPECT_THROW(read_calibration(is), ConfigError);
}

TEST(LabCalibration, RepositoryFileIsComplete) {
    const Calibration c = load_calibration(RSI_CALIBRATION_FILE);
    EXPECT_GT(c.r_max, 0.0);
    EXPECT_GT(c.pointwise_c, 0.0);
    EXPECT_GT(c.c0, 0.0);
    EXPECT_FALSE(c.provenance.empty());
}

TEST(LabWeak11, HomogeneousInF) {
    const ExperimentConfig cfg = small_config();
    const SphereFunction omega = cfg.omega();
    KernelBank bank(omega, cfg.mesh);
    const GridFunction f = spike_train(cfg.mesh, 64, 5, 0.5, 2.0, 11);
    GridFunction f10 = f;
    f10 *= 10.0;
    const WeakProfile a = weak_profile("f", f, bank, cfg, c_omega(omega));
    const WeakProfile b = weak_profile("10f", f10, bank, cfg, c_omega(omega));
    ASSERT_EQ(a.ratio.size(), b.ratio.size());
    for (std::size_t i = 0; i < a.ratio.size(); ++i) {
        EXPECT_NEAR(b.lambda[i], 10.0 * a.lambda[i], 1e-12 * b.lambda[i]);
        EXPECT_EQ(a.measure[i], b.measure[i]);
        EXPECT_NEAR(a.ratio[i], b.ratio[i], 1e-12 * std::max(a.ratio[i], 1e-300));
    }
    EXPECT_GT(sup_ratio(a), 0.0);
}

TEST(LabWeak11, ZeroKernelEmptyLevelSets) {
    ExperimentConfig cfg = small_config();
    cfg.kernel = "zero";
    KernelBank bank(cfg.omega(), cfg.mesh);
    const WeakProfile p = weak_profile("spike", spike_train(cfg.mesh, 64, 3, 1.0, 1.0, 1), bank, cfg, 0.0);
    for (std::size_t i = 0; i < p.lambda.size(); ++i) {
        EXPECT_EQ(p.measure[i], 0.0);
        EXPECT_EQ(p.ratio[i], 0.0);
    }
    try {
        run_weak11(cfg, load_calibration(cfg.calibration));
        ADD_FAILURE() << "zero kernel accepted";
    } catch (const std::invalid_argument& e) {
        EXPECT_STREQ(e.what(), "kernel has no strength");
    }
}

TEST(LabWeak11, TrendStatistic) {
    WeakProfile p;
    for (int i = 0; i < 8; ++i) p.lambda.push_back(std::pow(10.0, 0.5 * i));
    p.ratio = {5, 5, 1, 1, 1, 1, 1, 1};
    const TrendStat t = trend_stat(p);
    EXPECT_DOUBLE_EQ(t.low_mean, (5.0 + 5.0 + 1.0) / 3.0);
    EXPECT_DOUBLE_EQ(t.median, 1.0);
}

TEST(LabWeak11, SuiteShape) {
    const std::vector<NamedInput> in = weak11_suite(small_config());
    ASSERT_EQ(in.size(), 6u);
    EXPECT_NEAR(in[0].f.l1(), 1.0, 1e-12);
    EXPECT_NEAR(in[2].f.l1(), 16.0, 1e-12);
    for (const NamedInput& x : in) EXPECT_GT(x.f.l1(), 0.0) << x.name;
    // CZ bad parts have mean zero.
    EXPECT_NEAR(in[3].f.integral(), 0.0, 1e-9 * in[3].f.l1());
}

TEST(LabDecay, NeedsThreeShifts) {
    ExperimentConfig cfg = small_config();
    cfg.s_list = {4, 6};
    EXPECT_THROW(run_decay(cfg), std::invalid_argument);
}

TEST(LabDecay, FitRecoversSyntheticRate) {
    std::vector<DecayRow> rows;
    for (int s : {3, 5, 7, 9}) rows.push_back({s, s * std::exp2(-0.35 * s), 0, 0});
    const auto d = fit_delta(rows);
    ASSERT_TRUE(d.has_value());
    EXPECT_NEAR(*d, 0.7, 1e-12);
    EXPECT_FALSE(fit_delta({{4, 0.0, 0, 0}, {6, 0.0, 0, 0}, {8, 0.0, 0, 0}}).has_value());
}

TEST(LabDecay, ScalesLinearlyWithFAndAlpha) {
    const ExperimentConfig cfg = small_config();
    const ExperimentReport rep = run_decay(cfg);
    const Check* c = rep.summary.find("decay.scaling_L_cf_over_cL");
    ASSERT_NE(c, nullptr);
    EXPECT_TRUE(c->pass) << c->measured;
}

TEST(LabDecay, ZeroKernelSkipsFit) {
    ExperimentConfig cfg = small_config();
    cfg.kernel = "zero";
    const ExperimentReport rep = run_decay(cfg);
    EXPECT_TRUE(rep.all_pass());
    EXPECT_EQ(rep.summary.find("decay.delta_hat"), nullptr);
    ASSERT_FALSE(rep.notes.empty());
    EXPECT_NE(rep.notes.front().find("vanishes"), std::string::npos);
}

TEST(LabDecay, L1ChainOrderedForRoughKernel) {
    const ExperimentConfig cfg = small_config();
    const GridFunction f = decay_input(cfg);
    const CZDecomposition dec = cz_decompose(f, cfg.alpha, default_root_level(f, cfg.alpha));
    const L1Chain ch = l1_chain(dec, f.l1(), cfg.rough_omega(), cfg);
    EXPECT_GT(ch.links.front(), 0.0);
    EXPECT_GT(ch.pieces, 0);
    EXPECT_TRUE(l1_chain_report(ch, "").all_pass());
}

TEST(LabOrtho, SingleLayerMaxIsNorm) {
    GridFunction b(4, {0, 0, 16, 16});
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (double& v : b.samples()) v = nd(rng);
    const RmReport rm = rm_check({b}, 10, 1);
    EXPECT_NEAR(rm.B, b.l2(), 1e-12 * b.l2());
}

TEST(LabOrtho, ZeroKernelGivesZeros) {
    ExperimentConfig cfg = small_config();
    cfg.kernel = "zero";
    const ExperimentReport rep = run_orthogonality(cfg, load_calibration(cfg.calibration), 2);
    EXPECT_TRUE(rep.all_pass());
    EXPECT_EQ(rep.summary.find("ortho.consecutive_max_ratio")->measured, 0.0);
}

TEST(LabDeterminism, IdenticalConfigGivesIdenticalFiles) {
    const ExperimentConfig cfg = small_config();
    const Calibration cal = load_calibration(cfg.calibration);
    EXPECT_EQ(run_weak11(cfg, cal).files, run_weak11(cfg, cal).files);
    EXPECT_EQ(run_decay(cfg).files, run_decay(cfg).files);
    EXPECT_EQ(run_orthogonality(cfg, cal, 2).files, run_orthogonality(cfg, cal, 2).files);
}

TEST(LabOutputs, WritesSummaryAndData) {
    const auto dir = std::filesystem::temp_directory_path() / "rsi_lab_outputs";
    std::filesystem::remove_all(dir);
    const ExperimentReport rep = run_kernel_dump(small_config());
    write_outputs(rep, dir);
    for (const char* name : {"kernel.csv", "sphere.csv", "net.csv", "kernel_dump_summary.csv"})
        EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
    std::ifstream in(dir / "kernel.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "x,y,value");
    std::ifstream s(dir / "kernel_dump_summary.csv");
    std::getline(s, header);
    EXPECT_EQ(header, "invariant,measured,threshold,pass");
    std::filesystem::remove_all(dir);
}

TEST(LabChecks, PointwiseControlWithFrozenConstant) {
    const Calibration cal = load_calibration(RSI_CALIBRATION_FILE);
    const Report r = check_pointwise_control(SphereFunction::cosine(1024), cal.pointwise_c, 2);
    EXPECT_TRUE(r.all_pass()) << r.checks[0].measured << " " << r.checks[1].measured;
}

TEST(LabChecks, FoldWorstKeepsFailures) {
    Report acc;
    Report a, b, c;
    a.at_most("x", 0.5, 1.0);
    b.at_most("x", 0.9, 1.0);
    c.at_most("x", 2.0, 1.0);
    fold_worst(acc, a);
    fold_worst(acc, b);
    EXPECT_EQ(acc.checks.size(), 1u);
    EXPECT_EQ(acc.checks[0].measured, 0.9);
    fold_worst(acc, c);
    fold_worst(acc, a);
    EXPECT_FALSE(acc.checks[0].pass);
    EXPECT_EQ(acc.checks[0].measured, 2.0);
}

TEST(LabVerify, CorruptedC0FailsFDecay) {
    ExperimentConfig cfg = small_config();
    cfg.c0 = 0.01;
    const ExperimentReport rep = run_verify(cfg, load_calibration(cfg.calibration));
    EXPECT_FALSE(rep.all_pass());
    const Check* c = rep.summary.find("layering.F_measure_ratio");
    ASSERT_NE(c, nullptr);
    EXPECT_FALSE(c->pass);
}

TEST(LabVerify, ZeroKernelPassesVacuously) {
    ExperimentConfig cfg = small_config();
    cfg.kernel = "zero";
    const ExperimentReport rep = run_verify(cfg, load_calibration(cfg.calibration));
    for (const Check& c : rep.summary.checks) EXPECT_TRUE(c.pass) << c.name << " " << c.measured;
}
