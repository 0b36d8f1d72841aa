#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wdcusum/detector.hpp"
#include "wdcusum/distributions.hpp"
#include "wdcusum/model.hpp"

namespace wdcusum {

struct McOptions {
    std::uint64_t trials = 10000;
    std::uint64_t horizon = 0;
    std::uint64_t seed = 0;
    unsigned workers = 0; // 0 = hardware concurrency
};

// Mean stopping time over independent trials. Censored trials contribute the
// horizon, which makes the mean a lower bound whenever censored > 0.
struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t censored = 0;
    std::uint64_t horizon = 0;
    std::uint64_t seed = 0;

    bool is_censored() const noexcept { return censored > 0; }
    double lower_95() const noexcept { return mean - 1.96 * std_error; }
    double upper_95() const noexcept { return mean + 1.96 * std_error; }
    // One-sided 95% lower confidence limit.
    double lower_one_sided_95() const noexcept { return mean - 1.645 * std_error; }
};

// Trial t runs on a stream seeded with derive_seed(options.seed, t).
McEstimate estimate_mtfa(const DetectorParams &params, const DensityPair &pair, const NetworkConfig &config,
                         const McOptions &options);

// The model generating the post-change streams. `truth` may differ from the
// detector's assumed config (same sensor count) to study mismatch.
struct WaddScenario {
    NetworkConfig truth;
    PhaseSchedule schedule;
    TrajectoryPolicy policy;
};

// Mean of tau - nu + 1 with the change at nu_1 = 1 and a fresh detector.
// Throws ErrorCode::Parameter unless the schedule starts at 1.
McEstimate estimate_wadd(const DetectorParams &params, const DensityPair &pair, const NetworkConfig &config,
                         const WaddScenario &scenario, const McOptions &options);

// Throws ErrorCode::Censoring when more than `fraction` of trials were censored.
void enforce_censoring_budget(const McEstimate &estimate, double fraction, const std::string &what);

struct Calibration {
    double threshold = 0.0;
    McEstimate achieved;
    std::size_t evaluations = 0;
};

// Bisection on b (rho = 1/b) over [ln T / 4, 4 ln T] until the MTFA estimate is
// within tolerance_rel of the target. Every evaluation reuses options.seed, so
// the estimate is computed on common random numbers. options.horizon == 0
// selects 50 x target. Throws ErrorCode::Calibration on failure.
Calibration calibrate_threshold(double target, const DensityPair &pair, const NetworkConfig &config,
                                const McOptions &options, double tolerance_rel = 0.05);

struct ScalingConstants {
    std::vector<double> c; // c_1..c_{n-m}
    std::size_t h = 1;     // first phase where the cumulative c reaches 1
};

// c_i = d_i * I_i / log(gamma), with kl[i-1] the KL number of phase i.
ScalingConstants scaling_constants(std::span<const std::uint64_t> durations, double gamma, std::span<const double> kl);

// First-order asymptotic delay
// log(gamma) * (sum_{i<h} c_i / I_i + (1 - sum_{i<h} c_i) / I_h).
double theory_delay(double gamma, std::span<const double> kl, const ScalingConstants &constants);

enum class PolicyKind { Prefix, Rotating, Uniform };

std::string policy_kind_name(PolicyKind kind);
PolicyKind parse_policy_kind(const std::string &name);
TrajectoryPolicy make_policy(PolicyKind kind);

struct CurveRequest {
    std::vector<double> gamma_grid; // ascending
    DensityPair pair = DensityPair(DensityModel::gaussian(0.0, 1.0), DensityModel::gaussian(1.0, 1.0));
    NetworkConfig detector{1, 1, 1};
    std::optional<NetworkConfig> truth; // defaults to `detector`
    std::vector<std::uint64_t> durations; // transient durations of the true model
    PolicyKind policy = PolicyKind::Uniform;
    std::uint64_t mtfa_trials = 10000;
    std::uint64_t wadd_trials = 10000;
    std::uint64_t mtfa_horizon = 0; // 0 = default_mtfa_horizon(gamma, calibrate)
    std::uint64_t wadd_horizon = 0; // 0 = 100 x theory delay
    std::uint64_t kl_trials = 100000;
    bool calibrate = false;
    double tolerance = 0.05;
    double censoring_budget = 0.001;
    std::uint64_t seed = 0;
    unsigned workers = 0;
};

struct CurveRow {
    double gamma_target = 0.0;
    double threshold = 0.0;
    std::vector<double> rho;
    bool calibrated = false;
    McEstimate mtfa;
    McEstimate wadd;
    double theory_wadd = 0.0;
};

// Sub-seeds of a curve run: MTFA trials use derive_seed(seed, 1), WADD trials
// derive_seed(seed, 2), KL estimation derive_seed(seed, 3).
std::uint64_t mtfa_seed(std::uint64_t master) noexcept;
std::uint64_t wadd_seed(std::uint64_t master) noexcept;
std::uint64_t kl_seed(std::uint64_t master) noexcept;

// KL numbers of every phase of `config`, in phase order.
std::vector<double> kl_ladder(const DensityPair &pair, const NetworkConfig &config, std::uint64_t trials,
                              std::uint64_t seed, unsigned workers);

// 50 x gamma for calibrated thresholds. With b = log(gamma) the MTFA exceeds
// gamma by a factor that grows with gamma (about 90 at gamma = e^5 for the
// L = 3, m = 1, n = 3 network), so theory-mode runs get 2000 x gamma.
std::uint64_t default_mtfa_horizon(double gamma, bool calibrated);

std::vector<CurveRow> curve(const CurveRequest &request);

} // namespace wdcusum
