// The lab experiments. Each returns an ExperimentReport holding its CSV files
// and a summary of asserted invariants.
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rsi/lab/calibration.hpp"
#include "rsi/lab/checks.hpp"
#include "rsi/lab/config.hpp"
#include "rsi/lab/suites.hpp"

namespace rsi::lab {

struct ExperimentReport {
    std::string name;
    Report summary;
    std::vector<std::string> notes;
    std::optional<double> delta_hat;
    std::vector<std::pair<std::string, std::string>> files;  // file name, contents

    bool all_pass() const { return summary.all_pass(); }
};

namespace detail {

inline std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline void add_prefixed(Report& dst, const std::string& prefix, const Report& src) { dst.append(src, prefix + "."); }

inline std::vector<int> first_levels(LevelRange lv, int n) {
    std::vector<int> out;
    for (int k = lv.lo; k <= lv.hi && static_cast<int>(out.size()) < n; ++k) out.push_back(k);
    return out;
}

}  // namespace detail

/// `invariant,measured,threshold,pass`
inline std::string summary_csv(const Report& r) {
    std::ostringstream os;
    os << "invariant,measured,threshold,pass\n";
    for (const Check& c : r.checks)
        os << c.name << ',' << detail::num(c.measured) << ',' << detail::num(c.threshold) << ','
           << (c.pass ? "true" : "false") << '\n';
    return os.str();
}

/// Writes every file of the report plus `<name>_summary.csv` (and notes, if any).
inline void write_outputs(const ExperimentReport& rep, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto put = [&](const std::string& name, const std::string& body) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
        out << body;
    };
    for (const auto& [name, body] : rep.files) put(name, body);
    put(rep.name + "_summary.csv", summary_csv(rep.summary));
    if (!rep.notes.empty()) {
        std::string body;
        for (const std::string& n : rep.notes) body += n + '\n';
        put(rep.name + "_notes.txt", body);
    }
}

inline Calibration calibration_for(const ExperimentConfig& cfg) { return load_calibration(cfg.calibration); }

inline double c0_for(const ExperimentConfig& cfg) { return cfg.c0 ? *cfg.c0 : calibration_for(cfg).c0; }

/// Tower-suite level range: the four finest configured levels.
inline LevelRange tower_levels(const ExperimentConfig& cfg) {
    const LevelRange lv = cfg.levels();
    return {lv.lo, std::min(lv.hi, lv.lo + 3)};
}

// ---------------------------------------------------------------------------
// weak11

struct WeakProfile {
    std::string input;
    double f_l1 = 0.0;
    std::vector<double> lambda, measure, ratio;
};

/// Spike trains, CZ bad parts of random blobs and a smooth bump on [0, 1/2)^2.
inline std::vector<NamedInput> weak11_suite(const ExperimentConfig& cfg) {
    const int m = cfg.mesh;
    const Coord n = Coord{1} << (m - 1);
    const std::uint64_t base = cfg.seed * 1000;
    std::vector<NamedInput> in;
    GridFunction one(m, {0, 0, n, n});
    one.ref(n / 2, n / 2) = 1.0 / one.cell_area();
    in.push_back({"spike1", std::move(one)});
    in.push_back({"spikes4", spike_train(m, n, 4, 1.0, 1.0, base + 4)});
    in.push_back({"spikes16", spike_train(m, n, 16, 1.0, 1.0, base + 16)});
    for (int i = 1; i <= 2; ++i) {
        const GridFunction blob = blob_field(m, n, 30, base + 100 + i);
        in.push_back({"czbad" + std::to_string(i), cz_bad_part(blob, 0.05 * blob.linf())});
    }
    in.push_back({"bump", smooth_bump(m, n)});
    return in;
}

/// R(lambda) = lambda |{T_* f > lambda}| / (c_omega ||f||_1) on the configured
/// lambda grid, centred by default on the median value of T_* f above round-off.
inline WeakProfile weak_profile(const std::string& name, const GridFunction& f, KernelBank& bank,
                                const ExperimentConfig& cfg, double c_om) {
    WeakProfile p;
    p.input = name;
    p.f_l1 = f.l1();
    const GridFunction T = maximal_dyadic(bank, f, cfg.levels());
    std::vector<double> vals;
    for (double v : T.samples())
        if (v > 0.0) vals.push_back(v);
    std::sort(vals.begin(), vals.end());
    // Centre: median over the values above the FFT round-off floor.
    const double floor = vals.empty() ? 0.0 : 1e-9 * vals.back();
    const auto above = std::upper_bound(vals.begin(), vals.end(), floor);
    const double typical = above == vals.end() ? 1.0 : *(above + (vals.end() - above) / 2);
    const double area = T.cell_area();
    for (double lam : lambda_grid(cfg, typical)) {
        const auto count = vals.end() - std::upper_bound(vals.begin(), vals.end(), lam);
        const double meas = static_cast<double>(count) * area;
        p.lambda.push_back(lam);
        p.measure.push_back(meas);
        p.ratio.push_back(c_om > 0.0 && p.f_l1 > 0.0 ? lam * meas / (c_om * p.f_l1) : 0.0);
    }
    return p;
}

inline std::vector<WeakProfile> weak11_profiles(const ExperimentConfig& cfg) {
    const SphereFunction omega = cfg.omega();
    const double c_om = c_omega(omega);
    if (c_om == 0.0) throw std::invalid_argument("kernel has no strength");
    KernelBank bank(omega, cfg.mesh);
    std::vector<WeakProfile> out;
    for (const NamedInput& in : weak11_suite(cfg)) out.push_back(weak_profile(in.name, in.f, bank, cfg, c_om));
    return out;
}

struct TrendStat {
    double low_mean = 0.0;  // mean R over the lowest decade of lambda
    double median = 0.0;
};

inline TrendStat trend_stat(const WeakProfile& p) {
    TrendStat t;
    if (p.ratio.empty()) return t;
    const double cut = 10.0 * p.lambda.front();
    int n = 0;
    for (std::size_t i = 0; i < p.lambda.size() && p.lambda[i] <= cut; ++i, ++n) t.low_mean += p.ratio[i];
    t.low_mean /= n;
    std::vector<double> r = p.ratio;
    std::sort(r.begin(), r.end());
    const std::size_t k = r.size() / 2;
    t.median = r.size() % 2 ? r[k] : 0.5 * (r[k - 1] + r[k]);
    return t;
}

inline double sup_ratio(const WeakProfile& p) { return p.ratio.empty() ? 0.0 : *std::max_element(p.ratio.begin(), p.ratio.end()); }

inline std::string weak11_csv(const std::vector<WeakProfile>& profiles) {
    std::ostringstream os;
    os << "input,lambda,measure,ratio\n";
    for (const WeakProfile& p : profiles)
        for (std::size_t i = 0; i < p.lambda.size(); ++i)
            os << p.input << ',' << detail::num(p.lambda[i]) << ',' << detail::num(p.measure[i]) << ','
               << detail::num(p.ratio[i]) << '\n';
    return os.str();
}

inline ExperimentReport run_weak11(const ExperimentConfig& cfg, const Calibration& cal) {
    ExperimentReport rep;
    rep.name = "weak11";
    const std::vector<WeakProfile> profiles = weak11_profiles(cfg);
    for (const WeakProfile& p : profiles) {
        rep.summary.at_most("weak11." + p.input + ".sup_ratio", sup_ratio(p), cal.r_max);
        const TrendStat t = trend_stat(p);
        rep.summary.at_most("weak11." + p.input + ".low_lambda_mean", t.low_mean, 2.0 * t.median);
    }
    rep.files.push_back({"weak11.csv", weak11_csv(profiles)});
    return rep;
}

// ---------------------------------------------------------------------------
// decay

/// 128-spike train on [0, 4)^2 whose CZ cubes at level alpha fall on the levels
/// k - s reached by the configuration.
inline GridFunction decay_input(const ExperimentConfig& cfg) {
    const LevelRange lv = cfg.levels();
    const int q_lo = std::max(lv.lo - cfg.s_list.back(), 1 - cfg.mesh);
    const int q_hi = std::max(lv.hi - cfg.s_list.front(), q_lo);
    return spike_train(cfg.mesh, Coord{4} << cfg.mesh, 128, cfg.alpha * std::pow(4.0, q_lo),
                       cfg.alpha * std::pow(4.0, q_hi + 1), cfg.seed * 1000 + 7);
}

/// Active levels at shift s: b_{k-s} needs k - s >= -mesh.
inline LevelRange shifted_levels(LevelRange lv, int s, int mesh) { return {std::max(lv.lo, s - mesh), lv.hi}; }

struct DecayRow {
    int s = 0;
    double L = 0.0;
    int active = 0;
    int layers = 0;
};

/// L(s) = || sup over truncations | sum_K T_{K,2} b_{k-s} | ||_2 on the standard
/// grid, through the layer linearization.
inline std::vector<DecayRow> decay_profile(const CZDecomposition& dec, const SphereFunction& omega,
                                           const ExperimentConfig& cfg) {
    const int mesh = cfg.mesh;
    std::vector<DecayRow> rows;
    std::optional<SphereFunction> last;
    std::unique_ptr<KernelBank> bank;
    for (int s : cfg.s_list) {
        DecayRow row;
        row.s = s;
        const SphereFunction om2 = split_omega(omega, s, cfg.eta).second;
        if (!last || !(*last == om2)) {
            bank = std::make_unique<KernelBank>(om2, mesh);
            last = om2;
        }
        const LevelRange lv = shifted_levels(cfg.levels(), s, mesh);
        if (!lv.empty()) {
            std::vector<DyadicCube> part;
            for (const ActiveCube& a : active_cubes(dec, s, kStandardShift, lv)) part.push_back(a.cube);
            const auto layers = select_layers(part, mesh);
            CubeOperator op(dec, s, *bank);
            const auto beta = layer_sums(layers, op, mesh);
            row.L = linearized_sup(part, layers, beta, mesh).l2();
            row.active = static_cast<int>(part.size());
            row.layers = static_cast<int>(layers.size());
        }
        rows.push_back(row);
    }
    return rows;
}

/// Least-squares slope of log2(L / s) against s over the positive L; returns
/// delta = -2 slope.
inline std::optional<double> fit_delta(const std::vector<DecayRow>& rows) {
    std::vector<std::pair<double, double>> pts;
    for (const DecayRow& r : rows)
        if (r.L > 0.0) pts.push_back({static_cast<double>(r.s), std::log2(r.L / r.s)});
    if (pts.size() < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (auto [x, y] : pts) mx += x, my += y;
    mx /= pts.size();
    my /= pts.size();
    double sxy = 0.0, sxx = 0.0;
    for (auto [x, y] : pts) sxy += (x - mx) * (y - my), sxx += (x - mx) * (x - mx);
    return -2.0 * sxy / sxx;
}

/// The L^1 chain for the large-Omega part, summed over s and all four shifts:
///   A = sum ||T_{K,1} b_{k-s}||_1 <= B = sum_k ||K_{k,1}||_1 ||b_{k-s}||_1
///     <= kappa sum_s ||Omega_1||_1 sum_k ||b_{k-s}||_1 <= kappa sum_s ||Omega_1||_1 sum_Q ||b_Q||_1
///     <= 2 kappa ||f||_1 sum_s ||Omega_1||_1
///     <= 2 kappa ||f||_1 max(1, 1 / (eta ln 2)) int |Omega| (1 + log+(|Omega| / ||Omega||_1))
///     <= C c_Omega ||f||_1,  C = 2 kappa max(1, 1 / (eta ln 2)),
/// kappa = max over (s, k) of the lattice ratio ||K_{k,1}||_1 / ||Omega_1||_1.
struct L1Chain {
    std::vector<double> links;  // the seven quantities above, in order
    double kappa = 0.0;
    double constant = 0.0;
    double omega1_sum = 0.0;
    int pieces = 0;
};

inline L1Chain l1_chain(const CZDecomposition& dec, double f_l1, const SphereFunction& omega,
                        const ExperimentConfig& cfg) {
    const int mesh = cfg.mesh;
    double A = 0.0, B = 0.0, C3a = 0.0, kappa = 0.0, om1_sum = 0.0;
    int pieces = 0;
    std::map<int, GridFunction> bad;
    const auto bad_at = [&](int level) -> const GridFunction& {
        auto it = bad.find(level);
        if (it != bad.end()) return it->second;
        return bad[level] = dec.bad_at_level(level);
    };
    for (int s : cfg.s_list) {
        const SphereFunction om1 = split_omega(omega, s, cfg.eta).first;
        const double w1 = l1_norm(om1);
        om1_sum += w1;
        if (w1 == 0.0) continue;
        const LevelRange lv = shifted_levels(cfg.levels(), s, mesh);
        if (lv.empty()) continue;
        KernelBank bank(om1, mesh);
        for (int k = lv.lo; k <= lv.hi; ++k) {
            const double bl1 = bad_at(k - s).l1();
            const double kl1 = bank.at(k).kernel().l1();
            kappa = std::max(kappa, kl1 / w1);
            B += kl1 * bl1;
            C3a += w1 * bl1;
        }
        for (const Shift& w : kAllShifts)
            for (const ActiveCube& a : active_cubes(dec, s, w, lv)) {
                A += apply_TK(bank.at(a.cube.level), a.cube, bad_at(a.cube.level - s)).l1();
                ++pieces;
            }
    }
    double badQ = 0.0;
    for (const BadCube& q : dec.bad) badQ += q.b.l1();
    const double l1om = l1_norm(omega);
    double integral = 0.0;
    if (l1om > 0.0)
        for (double x : omega.values()) {
            const double a = std::abs(x);
            integral += a * (1.0 + std::max(0.0, std::log(a / l1om)));
        }
    integral *= omega.arc_width();
    const double factor = std::max(1.0, 1.0 / (cfg.eta * std::log(2.0)));
    L1Chain ch;
    ch.kappa = kappa;
    ch.constant = 2.0 * kappa * factor;
    ch.omega1_sum = om1_sum;
    ch.pieces = pieces;
    ch.links = {A,
                B,
                kappa * C3a,
                kappa * om1_sum * badQ,
                2.0 * kappa * f_l1 * om1_sum,
                2.0 * kappa * f_l1 * factor * integral,
                ch.constant * c_omega(omega) * f_l1};
    return ch;
}

inline Report l1_chain_report(const L1Chain& ch, const std::string& prefix) {
    static const char* names[] = {"direct_le_young", "young_le_kernel_mass", "levels_le_all_bad",
                                  "bad_le_twice_f",  "split_sum_le_llogl",   "llogl_le_c_omega"};
    Report r;
    for (std::size_t i = 0; i + 1 < ch.links.size(); ++i) {
        const double a = ch.links[i], b = ch.links[i + 1];
        r.add(prefix + names[i], a, b, a <= b * (1.0 + 1e-12));
    }
    r.add(prefix + "total_le_C_c_omega_f", ch.links.front(), ch.links.back(),
          ch.links.front() <= ch.links.back() * (1.0 + 1e-12));
    return r;
}

inline ExperimentReport run_decay(const ExperimentConfig& cfg) {
    if (cfg.s_list.size() < 3) throw std::invalid_argument("decay needs at least 3 s values for the fit");
    ExperimentReport rep;
    rep.name = "decay";
    const SphereFunction omega = cfg.omega();
    const double c_om = c_omega(omega);
    const double lambda = cfg.alpha * c_om;
    const GridFunction f = decay_input(cfg);
    const CZDecomposition dec = cz_decompose(f, cfg.alpha, default_root_level(f, cfg.alpha));
    const std::vector<DecayRow> rows = decay_profile(dec, omega, cfg);

    const bool all_zero = std::all_of(rows.begin(), rows.end(), [](const DecayRow& r) { return r.L == 0.0; });
    rep.delta_hat = fit_delta(rows);
    if (all_zero) {
        rep.notes.push_back("L(s) vanishes for every s; monotonicity and fit skipped");
    } else {
        double worst = 0.0;
        bool mono = true;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double q = rows[i - 1].L > 0.0 ? rows[i].L / rows[i - 1].L : INFINITY;
            worst = std::max(worst, q);
            if (!(rows[i].L < rows[i - 1].L)) mono = false;
        }
        rep.summary.add("decay.L_consecutive_ratio", worst, 1.0, mono);
        if (rep.delta_hat) rep.summary.above("decay.delta_hat", *rep.delta_hat, 0.0);
        else rep.summary.add("decay.delta_hat", 0.0, 0.0, false);
    }

    // Scaling f -> c f together with alpha -> c alpha scales every L(s) by c.
    {
        const double c = 4.0;
        GridFunction fc = f;
        fc *= c;
        const CZDecomposition decc = cz_decompose(fc, c * cfg.alpha, default_root_level(fc, c * cfg.alpha));
        const std::vector<DecayRow> rc = decay_profile(decc, omega, cfg);
        double dev = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i)
            dev = std::max(dev, rows[i].L > 0.0 ? std::abs(rc[i].L / (c * rows[i].L) - 1.0) : std::abs(rc[i].L));
        rep.summary.at_most("decay.scaling_L_cf_over_cL", dev, 1e-12);
    }

    std::ostringstream csv;
    csv << "s,L,delta_hat,M\n";
    for (const DecayRow& r : rows) {
        const double d = rep.delta_hat.value_or(NAN);
        const double M = std::sqrt(double(r.s) * r.s * std::exp2(-d * r.s) * c_om * lambda * f.l1());
        csv << r.s << ',' << detail::num(r.L) << ',' << detail::num(d) << ',' << detail::num(M) << '\n';
    }
    rep.files.push_back({"decay.csv", csv.str()});

    std::ostringstream chain_csv;
    chain_csv << "kernel,link,value\n";
    const std::pair<std::string, SphereFunction> kernels[] = {{cfg.kernel, omega}, {cfg.rough_kernel, cfg.rough_omega()}};
    for (const auto& [spec, om] : kernels) {
        const L1Chain ch = l1_chain(dec, f.l1(), om, cfg);
        rep.summary.append(l1_chain_report(ch, "l1chain[" + spec + "]."));
        static const char* link_names[] = {"A", "B", "kappa_levels", "kappa_all_bad", "twice_f", "llogl", "C_c_omega_f"};
        for (std::size_t i = 0; i < ch.links.size(); ++i)
            chain_csv << spec << ',' << link_names[i] << ',' << detail::num(ch.links[i]) << '\n';
        chain_csv << spec << ",kappa," << detail::num(ch.kappa) << '\n';
        chain_csv << spec << ",C," << detail::num(ch.constant) << '\n';
        if (ch.omega1_sum == 0.0)
            rep.notes.push_back("kernel " + spec + ": Omega_1 vanishes for every s, L1 chain is identically zero");
    }
    rep.files.push_back({"l1chain.csv", chain_csv.str()});

    std::ostringstream bad;
    write_bad_cubes_csv(bad, dec);
    rep.files.push_back({"bad_cubes.csv", bad.str()});
    return rep;
}

// ---------------------------------------------------------------------------
// ortho

inline ExperimentReport run_orthogonality(const ExperimentConfig& cfg, const Calibration& cal, int instances = 6) {
    ExperimentReport rep;
    rep.name = "ortho";
    const double c0 = cfg.c0 ? *cfg.c0 : cal.c0;
    const LevelRange lv = tower_levels(cfg);
    const int s = cfg.tower_s, mesh = cfg.mesh;
    KernelBank bank(cfg.omega(), mesh);
    std::ostringstream csv;
    csv << "instance,n,layers,max_norm,rm_ratio\n";
    double worst_ratio = 0.0, worst_rm = 0.0;
    int steps = 0;
    for (int i = 0; i < instances; ++i) {
        const GridFunction f = tower_field(mesh, lv.lo, lv.hi, s, cfg.seed * 1000 + 500 + i, true);
        const CZDecomposition dec = cz_decompose(f, 1.0, default_root_level(f, 1.0));
        const CubeLayering L = build_layering(dec, s, kStandardShift, lv, c0);
        if (i == 0) {
            std::ostringstream a, b;
            write_f_levels_csv(a, L.F, mesh);
            write_layers_csv(b, L);
            rep.files.push_back({"f_levels.csv", a.str()});
            rep.files.push_back({"layers.csv", b.str()});
        }
        CubeOperator op(dec, s, bank);
        std::vector<double> maxima;
        for (std::size_t n = 0; n < L.partitions.size(); ++n) {
            if (L.layers[n].empty()) continue;
            const auto beta = layer_sums(L.layers[n], op, mesh);
            const RmReport rm = rm_check(beta, 10, cfg.seed);
            maxima.push_back(rm.B);
            worst_rm = std::max(worst_rm, rm.ratio);
            csv << i << ',' << n + 1 << ',' << L.layers[n].size() << ',' << detail::num(rm.B) << ','
                << detail::num(rm.ratio) << '\n';
        }
        for (std::size_t n = 1; n < maxima.size(); ++n) {
            const double q = maxima[n - 1] > 0.0 ? maxima[n] / maxima[n - 1] : (maxima[n] > 0.0 ? INFINITY : 0.0);
            worst_ratio = std::max(worst_ratio, q);
            ++steps;
        }
    }
    if (steps == 0) rep.notes.push_back("fewer than two nonempty partitions per instance; decay check vacuous");
    rep.summary.at_most("ortho.consecutive_max_ratio", worst_ratio, 0.75);
    rep.summary.at_most("ortho.rm_ratio", worst_rm, 1.0);
    rep.files.push_back({"ortho.csv", csv.str()});
    return rep;
}

// ---------------------------------------------------------------------------
// verify

inline ExperimentReport run_verify(const ExperimentConfig& cfg, const Calibration& cal) {
    ExperimentReport rep;
    rep.name = "verify";
    Report& R = rep.summary;
    const SphereFunction omega = cfg.omega();
    const int mesh = cfg.mesh;
    const LevelRange lv = cfg.levels();
    const double c0 = cfg.c0 ? *cfg.c0 : cal.c0;
    const std::uint64_t seed = cfg.seed;

    {  // sphere
        Report r;
        double mass = 0.0;
        for (double v : omega.values()) mass += v;
        mass *= omega.arc_width();
        if (cfg.project) r.at_most("cancellation", std::abs(mass), 1e-12 * std::max(l1_norm(omega), 1.0));
        r.add("llogl_ge_l1_ln2", llogl_norm(omega), std::log(2.0) * l1_norm(omega),
              llogl_norm(omega) >= std::log(2.0) * l1_norm(omega) * (1.0 - 1e-15));
        r.add("c_omega_ge_l1", c_omega(omega), l1_norm(omega), c_omega(omega) >= l1_norm(omega));
        double split_defect = 0.0;
        for (int s : cfg.s_list) {
            const auto [a, b] = split_omega(omega, s, cfg.eta);
            for (int k = 0; k < omega.arc_count(); ++k)
                split_defect = std::max(split_defect, std::abs(a.value(k) + b.value(k) - omega.value(k)));
        }
        r.at_most("split_sum_defect", split_defect, 0.0);
        detail::add_prefixed(R, "sphere", r);
    }
    detail::add_prefixed(R, "dyadic", check_cover_identity(mesh, detail::first_levels(lv, 3)));
    {  // kernel
        Report r = check_partition_of_unity(seed);
        const SphereFunction cosine = SphereFunction::cosine(cfg.arc_count);
        double err = 0.0, worst_c = 0.0;
        for (int j : detail::first_levels(lv, 3)) {
            const double expect = l1_norm(cosine) * kernel_l1_per_omega();
            err = std::max(err, std::abs(build_kernel(j, cosine, mesh).l1() / expect - 1.0));
            const double bound = mesh_size(mesh) * std::ldexp(1.0, -j) * l1_norm(omega);
            const double sum = std::abs(build_kernel(j, omega, mesh).integral());
            worst_c = std::max(worst_c, bound > 0.0 ? sum / bound : sum);
        }
        r.at_most("cos_l1_ln2_relative_error", err, 0.02);
        r.at_most("cancellation_transfer_constant", worst_c, 16.0);
        detail::add_prefixed(R, "kernel", r);
    }
    detail::add_prefixed(R, "fft", check_convolution(seed));
    {  // operator
        Report r = check_support(omega, mesh, detail::first_levels(lv, 3), seed);
        r.append(check_localization_identity(omega, mesh, detail::first_levels(lv, 3), seed));
        r.append(check_pointwise_control(omega, cal.pointwise_c, seed));
        detail::add_prefixed(R, "operator", r);
    }
    detail::add_prefixed(R, "czd", check_cz(mesh, seed));
    detail::add_prefixed(R, "microlocal", check_direction_nets(omega, mesh, lv.lo, cfg.s_list, cfg.gamma));
    {  // layering
        const LevelRange tl = tower_levels(cfg);
        Report r = check_packing(mesh, lv, 2, 2.0, seed);
        r.append(check_f_decay(mesh, tl, cfg.tower_s, c0, seed));
        // Overlap threshold 4 keeps whole towers in one partition, so layers stack.
        r.append(check_linearization(omega, mesh, tl, cfg.tower_s, 4.0 / std::exp2(2.0 * cfg.tower_s), seed, 5));
        r.append(check_rademacher_menshov(seed));
        detail::add_prefixed(R, "layering", r);
    }
    {  // exceptional set E* = union of dilated bad cubes of a spike train
        const GridFunction f = decay_input(cfg);
        const CZDecomposition dec = cz_decompose(f, cfg.alpha, default_root_level(f, cfg.alpha));
        double estar = 0.0;
        for (const BadCube& q : dec.bad) estar += cfg.dilate * cfg.dilate * q.cube.measure();
        Report r;
        r.at_most("exceptional_set_measure", estar, cfg.dilate * cfg.dilate * f.l1() / cfg.alpha);
        detail::add_prefixed(R, "czd", r);
    }
    rep.files.push_back({"verify.csv", summary_csv(R)});
    return rep;
}

// ---------------------------------------------------------------------------
// calibrate

struct C0Scan {
    double c0 = 0.0;
    int u = 0;
    double worst_ratio = 0.0;
};

/// Smallest C0 = u / 4^s (u = 1..64) for which the F-level decay holds on
/// `count` tower fields.
inline C0Scan calibrate_c0(int mesh, LevelRange levels, int s, std::uint64_t seed, int count = 10) {
    std::vector<GridFunction> fields;
    for (int i = 0; i < count; ++i) fields.push_back(tower_field(mesh, levels.lo, levels.hi, s, seed + i));
    for (int u = 1; u <= 64; ++u) {
        const double c0 = u / std::exp2(2.0 * s);
        double worst = 0.0;
        int links = 0;
        for (const GridFunction& f : fields) {
            const DecayStats st = f_decay_stats(f, levels, s, c0);
            worst = std::max(worst, st.worst_ratio);
            links += st.links;
        }
        if (worst <= 0.25 && links > 0) return {c0, u, worst};
    }
    throw std::runtime_error("no C0 up to 64 / 4^s gives the F-level decay");
}

inline ExperimentReport run_calibrate(const ExperimentConfig& cfg, Calibration* out = nullptr) {
    ExperimentReport rep;
    rep.name = "calibrate";
    const SphereFunction omega = cfg.omega();
    double sup = 0.0;
    for (const WeakProfile& p : weak11_profiles(cfg)) sup = std::max(sup, sup_ratio(p));
    const LevelRange tl = tower_levels(cfg);
    const C0Scan scan = calibrate_c0(cfg.mesh, tl, cfg.tower_s, cfg.seed);
    const PointwiseRatios pr = pointwise_suite_ratios(omega, cfg.seed);

    Calibration cal;
    cal.r_max = 2.0 * sup;
    cal.c0 = scan.c0;
    cal.pointwise_c = 2.0 * std::max(pr.upper, pr.lower);
    cal.observed = {{"observed_sup_ratio", sup},
                    {"observed_pointwise_upper", pr.upper},
                    {"observed_pointwise_lower", pr.lower},
                    {"observed_c0_worst_F_ratio", scan.worst_ratio}};
    std::ostringstream lv;
    lv << "[" << cfg.levels().lo << ", " << cfg.levels().hi << "]";
    cal.provenance = {
        "Frozen calibration constants, produced by `rsilab calibrate`.",
        "config: mesh " + std::to_string(cfg.mesh) + ", levels " + lv.str() + ", kernel " + cfg.kernel +
            ", arc_count " + std::to_string(cfg.arc_count) + ", seed " + std::to_string(cfg.seed),
        "r_max: twice the largest weak-type ratio over the weak11 suite and lambda grid.",
        "c0: smallest u / 4^s (s = " + std::to_string(cfg.tower_s) + ", u = " + std::to_string(scan.u) +
            ") with |F^n| <= |F^{n-1}| / 4 on 10 tower fields.",
        "pointwise_c: twice the largest pointwise control ratio over 20 seeded inputs (mesh 7, levels [0, 3]).",
    };
    std::ostringstream body;
    write_calibration(body, cal);
    rep.files.push_back({"calibration.cfg", body.str()});
    rep.summary.above("calibrate.observed_sup_ratio", sup, 0.0);
    rep.summary.above("calibrate.c0", scan.c0, 0.0);
    rep.summary.above("calibrate.pointwise_c", cal.pointwise_c, 0.0);
    if (out) *out = cal;
    return rep;
}

// ---------------------------------------------------------------------------
// kernel-dump

/// K_{k_min} samples, Omega per arc and the direction net of the first s.
inline ExperimentReport run_kernel_dump(const ExperimentConfig& cfg) {
    ExperimentReport rep;
    rep.name = "kernel_dump";
    const SphereFunction omega = cfg.omega();
    const int j = cfg.levels().lo;
    const GridFunction K = build_kernel(j, omega, cfg.mesh);
    std::ostringstream k;
    k << "x,y,value\n";
    K.for_each([&](Coord x, Coord y, double v) {
        if (v != 0.0) k << detail::num(x * K.h()) << ',' << detail::num(y * K.h()) << ',' << detail::num(v) << '\n';
    });
    rep.files.push_back({"kernel.csv", k.str()});
    std::ostringstream sp;
    sp << "arc,angle,omega\n";
    for (int a = 0; a < omega.arc_count(); ++a)
        sp << a << ',' << detail::num(omega.arc_midpoint(a)) << ',' << detail::num(omega.value(a)) << '\n';
    rep.files.push_back({"sphere.csv", sp.str()});
    std::ostringstream net;
    write_net_csv(net, build_direction_net(cfg.s_list.front(), cfg.gamma, cfg.arc_count));
    rep.files.push_back({"net.csv", net.str()});
    rep.summary.add("kernel_dump.samples", static_cast<double>(K.box().cells()), 0.0, true);
    return rep;
}

}  // namespace rsi::lab
