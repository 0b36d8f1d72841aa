// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//
//   acceptance --cli <path to wdcusum> [--configs <dir>] [--only 1,3,...]
//
// Runtime budgets are part of each criterion and are checked on the wall clock.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <CLI11.hpp>

#include "oracle/oracle.hpp"
#include "wdcusum/detector.hpp"
#include "wdcusum/experiments.hpp"
#include "wdcusum/mixture.hpp"
#include "wdcusum/model.hpp"
#include "wdcusum/rng.hpp"

namespace {

using namespace wdcusum;
namespace fs = std::filesystem;

constexpr std::uint64_t kSeed = 2019;

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Criterion {
    int id;
    std::string title;
    double budget_seconds;
    std::function<Outcome()> run;
};

std::string num(double v, int precision = 4) {
    std::ostringstream out;
    out.precision(precision);
    out << v;
    return out.str();
}

DensityPair standard_pair() {
    return DensityPair(DensityModel::gaussian(0.0, 1.0), DensityModel::gaussian(1.0, 1.0));
}

DensityPair random_pair(RandomSource &rng) {
    const double mean = 0.25 + 2.0 * rng.uniform();
    const double variance = 0.5 + 1.5 * rng.uniform();
    return DensityPair(DensityModel::gaussian(0.0, 1.0), DensityModel::gaussian(mean, variance));
}

std::vector<double> random_rho(RandomSource &rng, std::size_t count) {
    std::vector<double> rho(count);
    for (double &r : rho) {
        r = 0.02 + 0.96 * rng.uniform();
    }
    return rho;
}

// Stream with a random first changepoint in [1, max_nu] and durations in [1, 3].
ObservationStream random_stream(const DensityPair &pair, const NetworkConfig &config, RandomSource &rng,
                                std::uint64_t max_nu, std::uint64_t seed) {
    std::vector<std::uint64_t> d(config.transient_count());
    for (auto &v : d) {
        v = 1 + rng.below(3);
    }
    const std::uint64_t nu = 1 + rng.below(max_nu);
    return ObservationStream(pair, config, PhaseSchedule(nu, d), UniformTrajectory{}, seed);
}

bool overlap(const McEstimate &a, const McEstimate &b) {
    return a.lower_95() <= b.upper_95() && b.lower_95() <= a.upper_95();
}

std::string ci(const McEstimate &e) {
    return num(e.mean) + " [" + num(e.lower_95()) + ", " + num(e.upper_95()) + "]";
}

// 1. Recursion against path enumeration.
Outcome recursion_vs_enumeration() {
    const std::vector<NetworkConfig> configs = {{1, 1, 1}, {2, 1, 1}, {2, 1, 2}, {3, 1, 2}, {3, 1, 3}, {3, 2, 3},
                                                {4, 1, 3}, {4, 2, 4}, {4, 2, 3}, {4, 3, 4}, {4, 4, 4}};
    constexpr int kStreams = 500;
    constexpr std::size_t kSteps = 8;
    double worst = 0.0;
    std::size_t compared = 0;
    for (std::size_t c = 0; c < configs.size(); ++c) {
        const NetworkConfig &config = configs[c];
        for (int s = 0; s < kStreams; ++s) {
            RandomSource rng(derive_seed(derive_seed(kSeed, 100 + c), s));
            const DensityPair pair = random_pair(rng);
            const DetectorParams params(0.0, random_rho(rng, config.transient_count()));
            ObservationStream stream = random_stream(pair, config, rng, kSteps, rng.below(1u << 30));
            Detector detector(pair, config, params);
            oracle::Observations seen;
            for (std::size_t k = 1; k <= kSteps; ++k) {
                const auto &x = stream.next().values;
                seen.push_back(x);
                const double w = detector.step(x).statistic;
                worst = std::max(worst, std::abs(w - oracle::batch_statistic(seen, params, pair, config)));
                ++compared;
            }
        }
    }
    return {worst <= 1e-9, "max |W - W_enum| = " + num(worst, 3) + " over " + std::to_string(compared) +
                               " prefixes of " + std::to_string(configs.size() * kStreams) + " streams"};
}

// 2. Mixture kernel against subset enumeration.
Outcome mixture_vs_enumeration() {
    constexpr int kVectors = 1000;
    double worst = 0.0;
    std::size_t cases = 0;
    for (std::size_t sensors = 1; sensors <= 12; ++sensors) {
        for (std::size_t size = 1; size <= sensors; ++size) {
            RandomSource rng(derive_seed(derive_seed(kSeed, 200 + sensors), size));
            std::vector<double> llrs(sensors);
            for (int v = 0; v < kVectors; ++v) {
                const double scale = 0.1 + 5.0 * rng.uniform();
                for (double &l : llrs) {
                    l = scale * rng.standard_normal();
                }
                const double fast = mixture_llr(llrs, size);
                const double exact = oracle::mixture_llr_enum(llrs, size);
                worst = std::max(worst, std::abs(fast - exact) / std::abs(exact));
                ++cases;
            }
        }
    }
    return {worst <= 1e-10, "max relative error " + num(worst, 3) + " over " + std::to_string(cases) + " vectors"};
}

// 3. MTFA at b = log(gamma) is at least gamma.
Outcome mtfa_bound() {
    const NetworkConfig config(3, 1, 3);
    Outcome out;
    for (const double exponent : {4.0, 5.0, 6.0}) {
        const double gamma = std::exp(exponent);
        const McOptions opts{2000, default_mtfa_horizon(gamma, false), mtfa_seed(kSeed), 0};
        const McEstimate est = estimate_mtfa(DetectorParams::defaults(gamma, config), standard_pair(), config, opts);
        const bool ok = est.censored == 0 && est.lower_one_sided_95() >= gamma;
        out.pass = out.pass && ok;
        out.detail += "e^" + num(exponent, 1) + ": lcl " + num(est.lower_one_sided_95()) + " vs " + num(gamma) +
                      ", censored " + std::to_string(est.censored) + "; ";
    }
    return out;
}

// 4. WADD does not depend on the trajectory.
Outcome trajectory_equality() {
    const NetworkConfig config(3, 1, 3);
    const DetectorParams params = DetectorParams::with_inverse_rho(6.0, config.transient_count());
    const McOptions opts{10000, 100000, wadd_seed(kSeed), 0};
    const std::vector<std::pair<std::string, TrajectoryPolicy>> policies = {
        {"prefix", PrefixTrajectory{}}, {"rotating", RotatingTrajectory{}}, {"uniform", UniformTrajectory{}}};
    std::vector<McEstimate> est;
    Outcome out;
    for (const auto &[name, policy] : policies) {
        const WaddScenario scenario{config, PhaseSchedule(1, {9, 10}), policy};
        est.push_back(estimate_wadd(params, standard_pair(), config, scenario, opts));
        out.pass = out.pass && est.back().censored == 0;
        out.detail += name + " " + ci(est.back()) + "; ";
    }
    for (std::size_t a = 0; a < est.size(); ++a) {
        for (std::size_t b = a + 1; b < est.size(); ++b) {
            out.pass = out.pass && overlap(est[a], est[b]);
        }
    }
    return out;
}

CurveRow calibrated_row(const NetworkConfig &detector, const NetworkConfig &truth, double gamma) {
    CurveRequest req;
    req.gamma_grid = {gamma};
    req.detector = detector;
    req.truth = truth;
    req.durations = {9, 10};
    req.policy = PolicyKind::Uniform;
    req.mtfa_trials = 10000;
    req.wadd_trials = 10000;
    req.kl_trials = 100000;
    req.calibrate = true;
    req.tolerance = 0.05;
    req.seed = kSeed;
    return curve(req).front();
}

bool matched(const CurveRow &row) {
    return std::abs(row.mtfa.mean / row.gamma_target - 1.0) <= 0.05 && row.mtfa.censored == 0 &&
           row.wadd.censored == 0;
}

// 5. Delay grows with the network size at a matched MTFA.
Outcome network_size_ordering() {
    const double gamma = std::exp(6.0);
    std::vector<CurveRow> rows;
    Outcome out;
    for (const std::size_t sensors : {3, 5, 10}) {
        const NetworkConfig config(sensors, 1, 3);
        rows.push_back(calibrated_row(config, config, gamma));
        const CurveRow &r = rows.back();
        out.pass = out.pass && matched(r);
        out.detail += "L=" + std::to_string(sensors) + " b " + num(r.threshold) + " mtfa " + num(r.mtfa.mean) +
                      " wadd " + ci(r.wadd) + "; ";
    }
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        out.pass = out.pass && rows[i].wadd.upper_95() < rows[i + 1].wadd.lower_95();
    }
    return out;
}

// 6. Knowing m and n helps, but only a little.
Outcome informed_vs_uninformed() {
    const double gamma = std::exp(6.0);
    const NetworkConfig truth(6, 2, 4);
    const CurveRow informed = calibrated_row(truth, truth, gamma);
    const CurveRow uninformed = calibrated_row(NetworkConfig(6, 1, 6), truth, gamma);
    const double diff = uninformed.wadd.mean - informed.wadd.mean;
    const double se = std::hypot(uninformed.wadd.std_error, informed.wadd.std_error);
    const double lcl = diff - 1.645 * se;
    const double relative = diff / informed.wadd.mean;
    Outcome out;
    out.pass = matched(informed) && matched(uninformed) && lcl >= 0.0 && relative < 0.25;
    out.detail = "informed " + ci(informed.wadd) + " (mtfa " + num(informed.mtfa.mean) + "), uninformed " +
                 ci(uninformed.wadd) + " (mtfa " + num(uninformed.mtfa.mean) + "); diff " + num(diff) +
                 ", one-sided lcl " + num(lcl) + ", gap " + num(100.0 * relative, 3) + "% of informed";
    return out;
}

// 7. KL ladder.
Outcome kl_ladder_check() {
    const DensityPair pair = standard_pair();
    const NetworkConfig config(3, 1, 3);
    constexpr std::uint64_t kTrials = 1000000;
    std::vector<KlEstimate> kl;
    Outcome out;
    for (std::size_t p = 1; p <= config.phase_count(); ++p) {
        kl.push_back(estimate_kl(pair, config, p, kTrials, derive_seed(kl_seed(kSeed), p)));
        out.detail += "I" + std::to_string(p) + " " + num(kl.back().estimate, 5) + " (se " +
                      num(kl.back().std_error, 2) + "); ";
    }
    for (std::size_t i = 0; i + 1 < kl.size(); ++i) {
        const double gap = kl[i + 1].estimate - kl[i].estimate;
        const double se = std::hypot(kl[i].std_error, kl[i + 1].std_error);
        out.pass = out.pass && gap >= 3.0 * se;
        out.detail += "gap " + num(gap / se, 3) + " se; ";
    }
    const KlEstimate single = estimate_kl(pair, NetworkConfig(1, 1, 1), 1, kTrials, derive_seed(kl_seed(kSeed), 0));
    const double z = (single.estimate - 0.5) / single.std_error;
    out.pass = out.pass && std::abs(z) <= 3.0;
    out.detail += "L=1 " + num(single.estimate, 5) + " (z " + num(z, 3) + ")";
    return out;
}

// 8. Property suite.
Outcome properties() {
    Outcome out;
    auto record = [&out](const std::string &name, bool ok, const std::string &value) {
        out.pass = out.pass && ok;
        out.detail += name + (ok ? " ok " : " FAILED ") + value + "; ";
    };

    // Random configs with L <= 8, random rho, streams of 100 steps.
    double min_w = 0.0;
    double perm_diff = 0.0;
    for (int s = 0; s < 1000; ++s) {
        RandomSource rng(derive_seed(derive_seed(kSeed, 800), s));
        const std::size_t sensors = 1 + rng.below(8);
        const std::size_t m = 1 + rng.below(sensors);
        const std::size_t n = m + rng.below(std::min<std::size_t>(sensors - m, 3) + 1);
        const NetworkConfig config(sensors, m, n);
        const DensityPair pair = random_pair(rng);
        const DetectorParams params(0.0, random_rho(rng, config.transient_count()));
        ObservationStream stream = random_stream(pair, config, rng, 60, rng.below(1u << 30));
        Detector plain(pair, config, params);
        Detector shuffled(pair, config, params);
        std::vector<std::size_t> order(sensors);
        std::vector<double> permuted(sensors);
        for (int k = 0; k < 100; ++k) {
            const auto &x = stream.next().values;
            std::iota(order.begin(), order.end(), std::size_t{0});
            for (std::size_t i = sensors; i > 1; --i) {
                std::swap(order[i - 1], order[rng.below(i)]);
            }
            for (std::size_t i = 0; i < sensors; ++i) {
                permuted[i] = x[order[i]];
            }
            const double w = plain.step(x).statistic;
            min_w = std::min(min_w, w);
            perm_diff = std::max(perm_diff, std::abs(w - shuffled.step(permuted).statistic));
        }
    }
    record("W >= 0", min_w >= 0.0, "(min " + num(min_w, 3) + ")");
    record("permutation", perm_diff <= 1e-12, "(max diff " + num(perm_diff, 3) + ")");

    double shift_diff = 0.0;
    for (int v = 0; v < 20000; ++v) {
        RandomSource rng(derive_seed(derive_seed(kSeed, 801), v));
        const std::size_t sensors = 1 + rng.below(12);
        const std::size_t size = 1 + rng.below(sensors);
        const double c = -3.0 + 6.0 * rng.uniform();
        std::vector<double> llrs(sensors);
        std::vector<double> shifted(sensors);
        for (std::size_t i = 0; i < sensors; ++i) {
            llrs[i] = 2.0 * rng.standard_normal();
            shifted[i] = llrs[i] + c;
        }
        const double lhs = mixture_llr(shifted, size);
        const double rhs = mixture_llr(llrs, size) + static_cast<double>(size) * c;
        shift_diff = std::max(shift_diff, std::abs(lhs - rhs));
    }
    record("shift identity", shift_diff <= 1e-12, "(max diff " + num(shift_diff, 3) + ")");

    std::size_t violations = 0;
    const NetworkConfig net3(3, 1, 3);
    const DensityPair pair = standard_pair();
    const DetectorParams base = DetectorParams::with_inverse_rho(4.0, net3.transient_count());
    for (int s = 0; s < 500; ++s) {
        RandomSource rng(derive_seed(derive_seed(kSeed, 802), s));
        const std::uint64_t seed = rng.below(1u << 30);
        const std::uint64_t nu = 1 + rng.below(50);
        std::uint64_t previous = 0;
        for (const double b : {0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0}) {
            ObservationStream stream(pair, net3, PhaseSchedule(nu, {9, 10}), UniformTrajectory{}, seed);
            const RunOutcome r = run_until_stop(stream, base.with_threshold(b), pair, net3, 100000);
            violations += r.time < previous ? 1 : 0;
            previous = r.time;
        }
    }
    record("threshold monotonicity", violations == 0, "(" + std::to_string(violations) + " violations)");

    // E[exp(llr)] = 1 under the pre-change law, one step per phase and three
    // steps through the phase sequence.
    constexpr int kSamples = 100000;
    double worst_z = 0.0;
    for (std::size_t p = 1; p <= net3.phase_count(); ++p) {
        RandomSource rng(derive_seed(derive_seed(kSeed, 803), p));
        double sum = 0.0;
        double sq = 0.0;
        std::vector<double> x(net3.sensors());
        for (int t = 0; t < kSamples; ++t) {
            for (double &v : x) {
                v = rng.standard_normal();
            }
            const double e = std::exp(mixture_llr(pair.per_sensor_llr(x), net3.anomaly_size(p)));
            sum += e;
            sq += e * e;
        }
        const double mean = sum / kSamples;
        const double se = std::sqrt((sq / kSamples - mean * mean) / (kSamples - 1));
        worst_z = std::max(worst_z, std::abs(mean - 1.0) / se);
    }
    {
        RandomSource rng(derive_seed(kSeed, 804));
        double sum = 0.0;
        double sq = 0.0;
        oracle::Observations obs(3, std::vector<double>(net3.sensors()));
        for (int t = 0; t < kSamples; ++t) {
            for (auto &x : obs) {
                for (double &v : x) {
                    v = rng.standard_normal();
                }
            }
            const double e = std::exp(oracle::l_mixture(obs, 1, {1, 1}, pair, net3, 3));
            sum += e;
            sq += e * e;
        }
        const double mean = sum / kSamples;
        const double se = std::sqrt((sq / kSamples - mean * mean) / (kSamples - 1));
        worst_z = std::max(worst_z, std::abs(mean - 1.0) / se);
    }
    record("unit mean", worst_z <= 3.0, "(max |z| " + num(worst_z, 3) + ")");

    double cusum_diff = 0.0;
    for (int s = 0; s < 500; ++s) {
        RandomSource rng(derive_seed(derive_seed(kSeed, 805), s));
        const std::size_t sensors = 1 + rng.below(8);
        const std::size_t m = 1 + rng.below(sensors);
        const NetworkConfig config(sensors, m, m);
        const DensityPair p = random_pair(rng);
        ObservationStream stream = random_stream(p, config, rng, 50, rng.below(1u << 30));
        oracle::Observations obs;
        Detector detector(p, config, DetectorParams(0.0, {}));
        std::vector<double> path;
        for (int k = 0; k < 100; ++k) {
            obs.push_back(stream.next().values);
            path.push_back(detector.step(obs.back()).statistic);
        }
        const std::vector<double> expected = oracle::single_phase_cusum(obs, p, config);
        for (std::size_t k = 0; k < path.size(); ++k) {
            cusum_diff = std::max(cusum_diff, std::abs(path[k] - expected[k]));
        }
    }
    record("m = n reduces to CuSum", cusum_diff <= 1e-12, "(max diff " + num(cusum_diff, 3) + ")");
    return out;
}

int run_shell(const std::string &command) {
    const int status = std::system((command + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// 9. Repeated runs and manifest replays are byte-identical.
Outcome determinism(const std::string &cli, const std::string &configs) {
    const fs::path dir = fs::absolute("acceptance_determinism");
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string net = " --L 3 --m 1 --n 3";
    const std::string gen_csv = (dir / "stream.csv").string();
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"gen", "gen" + net + " --d 9,10 --nu1 20 --steps 200 --seed 5"},
        {"detect", "detect" + net + " --gamma e^4 --full-trace --in " + gen_csv},
        {"kl", "kl" + net + " --trials 20000 --seed 5"},
        {"mtfa", "mtfa" + net + " --gamma e^3,e^4 --trials 300 --seed 5"},
        {"wadd", "wadd" + net + " --d 9,10 --gamma e^3,e^4 --trials 300 --kl-trials 5000 --seed 5"},
        {"calibrate", "calibrate" + net + " --gamma e^3 --trials 300 --seed 5"},
        {"curve", "curve --config " + configs + "/mismatch_uninformed.cfg --gamma e^3,e^4 --mtfa-trials 300"
                  " --wadd-trials 300 --kl-trials 5000"},
    };
    if (run_shell(cli + " gen" + net + " --d 9,10 --nu1 20 --steps 200 --seed 5 --out " + gen_csv) != 0) {
        return {false, "could not generate the detect input"};
    }
    Outcome out;
    for (const auto &[name, args] : commands) {
        const std::string a = (dir / (name + "_a.csv")).string();
        const std::string b = (dir / (name + "_b.csv")).string();
        const std::string c = (dir / (name + "_c.csv")).string();
        const std::string w = (dir / (name + "_w.csv")).string();
        const int code_a = run_shell(cli + " " + args + " --out " + a);
        const int code_b = run_shell(cli + " " + args + " --out " + b);
        const int code_c = run_shell(cli + " replay " + a + ".manifest.json --out " + c);
        const int code_w = run_shell(cli + " " + args + " --workers 3 --out " + w);
        const std::string first = slurp(a);
        const bool ok = (code_a == 0 || code_a == 10) && code_b == code_a && code_c == code_a && code_w == code_a &&
                        !first.empty() && first == slurp(b) && first == slurp(c) && first == slurp(w);
        out.pass = out.pass && ok;
        out.detail += name + (ok ? " identical" : " DIFFERS") + "; ";
    }
    out.detail += "repeat, replay and 3-worker runs compared byte for byte";
    return out;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app("Acceptance criteria");
    std::string cli;
    std::string configs = WDCUSUM_CONFIG_DIR;
    std::vector<int> only;
    app.add_option("--cli", cli, "Path to the wdcusum executable")->required();
    app.add_option("--configs", configs, "Directory holding the shipped configs");
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria = {
        {1, "recursion matches path enumeration", 60, recursion_vs_enumeration},
        {2, "mixture kernel matches subset enumeration", 60, mixture_vs_enumeration},
        {3, "MTFA at b = log(gamma) is at least gamma", 600, mtfa_bound},
        {4, "WADD equal across trajectories", 300, trajectory_equality},
        {5, "WADD grows with network size", 900, network_size_ordering},
        {6, "informed detector no slower, gap small", 900, informed_vs_uninformed},
        {7, "KL ladder strictly increasing", 120, kl_ladder_check},
        {8, "property suite", 120, properties},
        {9, "CLI determinism", 300, [&] { return determinism(cli, configs); }},
    };

    bool all = true;
    for (const Criterion &c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) {
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception &e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = seconds <= c.budget_seconds;
        const bool pass = out.pass && in_time;
        all = all && pass;
        std::cout << (pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.title << " (" << num(seconds, 3) << " s"
                  << (in_time ? "" : ", over the " + num(c.budget_seconds, 4) + " s budget") << ")\n      "
                  << out.detail << "\n"
                  << std::flush;
    }
    return all ? 0 : 1;
}
