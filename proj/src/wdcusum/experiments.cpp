#include "wdcusum/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wdcusum/error.hpp"
#include "wdcusum/parallel.hpp"

namespace wdcusum {

namespace {

McEstimate aggregate(std::span<const RunOutcome> outcomes, std::uint64_t horizon, std::uint64_t seed) {
    // Exact accumulation in trial order keeps the reported mean independent of
    // scheduling. long double holds squared sums exactly up to 2^64.
    std::uint64_t sum = 0;
    long double sum_sq = 0.0L;
    std::uint64_t censored = 0;
    for (const auto &o : outcomes) {
        sum += o.time;
        sum_sq += static_cast<long double>(o.time) * static_cast<long double>(o.time);
        censored += o.stopped ? 0 : 1;
    }
    const auto n = static_cast<long double>(outcomes.size());
    McEstimate est;
    est.trials = outcomes.size();
    est.censored = censored;
    est.horizon = horizon;
    est.seed = seed;
    est.mean = static_cast<double>(static_cast<long double>(sum) / n);
    if (outcomes.size() > 1) {
        const long double total = static_cast<long double>(sum);
        const long double var = std::max(0.0L, (sum_sq - total * total / n) / (n - 1.0L));
        est.std_error = static_cast<double>(std::sqrt(var / n));
    }
    return est;
}

// Runs trials [begin, end) into `out`, one fresh stream per trial.
template <class MakeStream>
void run_trials(std::size_t begin, std::size_t end, const DetectorParams &params, const DensityPair &pair,
                const NetworkConfig &config, std::uint64_t horizon, unsigned workers, MakeStream &&make_stream,
                std::vector<RunOutcome> &out) {
    parallel_for(begin, end, workers, [&](std::size_t t) {
        ObservationStream stream = make_stream(t);
        Detector detector(pair, config, params);
        out[t] = run_until_stop(stream, detector, horizon);
    });
}

void check_mc_options(const McOptions &options) {
    if (options.trials < 1) {
        fail(ErrorCode::Parameter, "Monte Carlo runs need at least one trial");
    }
    if (options.horizon < 1) {
        fail(ErrorCode::Parameter, "Monte Carlo runs need a horizon >= 1");
    }
}

auto pre_change_streams(const DensityPair &pair, const NetworkConfig &config, std::uint64_t seed) {
    return [&pair, &config, seed](std::size_t t) {
        return ObservationStream(pair, config, PhaseSchedule::never(), PrefixTrajectory{}, derive_seed(seed, t));
    };
}

enum class Verdict { Below, Within, Above };

struct Evaluation {
    Verdict verdict;
    std::optional<McEstimate> estimate; // absent when stopped early above the window
};

// Stops as soon as the running total proves the mean exceeds the upper edge of
// the window; the decision is exact since stopping times are non-negative.
// Each chunk runs with its horizon cut to the remaining budget: a trial that
// reaches the cut alone pushes the total past the limit.
Evaluation evaluate_mtfa_window(const DetectorParams &params, const DensityPair &pair, const NetworkConfig &config,
                                const McOptions &options, double target, double tolerance) {
    const std::size_t chunk = 4 * static_cast<std::size_t>(resolve_workers(options.workers));
    const double upper = target * (1.0 + tolerance);
    const long double limit = static_cast<long double>(upper) * static_cast<long double>(options.trials);
    std::vector<RunOutcome> outcomes(options.trials);
    long double running = 0.0L;
    auto streams = pre_change_streams(pair, config, options.seed);
    for (std::size_t lo = 0; lo < options.trials; lo += chunk) {
        const std::size_t hi = std::min<std::size_t>(options.trials, lo + chunk);
        const long double room = std::floor(limit - running) + 1.0L;
        const std::uint64_t cut = room < static_cast<long double>(options.horizon)
                                      ? static_cast<std::uint64_t>(room)
                                      : options.horizon;
        run_trials(lo, hi, params, pair, config, cut, options.workers, streams, outcomes);
        for (std::size_t t = lo; t < hi; ++t) {
            if (cut < options.horizon && !outcomes[t].stopped) {
                return Evaluation{Verdict::Above, std::nullopt};
            }
            running += static_cast<long double>(outcomes[t].time);
        }
        if (running > limit) {
            return Evaluation{Verdict::Above, std::nullopt};
        }
    }
    McEstimate est = aggregate(outcomes, options.horizon, options.seed);
    Verdict verdict = Verdict::Within;
    if (est.mean > upper) {
        verdict = Verdict::Above;
    } else if (est.mean < target * (1.0 - tolerance)) {
        verdict = Verdict::Below;
    }
    return Evaluation{verdict, est};
}

} // namespace

McEstimate estimate_mtfa(const DetectorParams &params, const DensityPair &pair, const NetworkConfig &config,
                         const McOptions &options) {
    check_mc_options(options);
    std::vector<RunOutcome> outcomes(options.trials);
    run_trials(0, options.trials, params, pair, config, options.horizon, options.workers,
               pre_change_streams(pair, config, options.seed), outcomes);
    return aggregate(outcomes, options.horizon, options.seed);
}

McEstimate estimate_wadd(const DetectorParams &params, const DensityPair &pair, const NetworkConfig &config,
                         const WaddScenario &scenario, const McOptions &options) {
    check_mc_options(options);
    if (scenario.schedule.first_change() != std::optional<std::uint64_t>(1)) {
        fail(ErrorCode::Parameter, "WADD is estimated with the change at time 1; schedule must start at nu1 = 1");
    }
    if (scenario.truth.sensors() != config.sensors()) {
        fail(ErrorCode::Config, "true model and detector disagree on the number of sensors");
    }
    scenario.schedule.check_against(scenario.truth);
    std::vector<RunOutcome> outcomes(options.trials);
    auto streams = [&](std::size_t t) {
        return ObservationStream(pair, scenario.truth, scenario.schedule, scenario.policy, derive_seed(options.seed, t));
    };
    run_trials(0, options.trials, params, pair, config, options.horizon, options.workers, streams, outcomes);
    return aggregate(outcomes, options.horizon, options.seed);
}

void enforce_censoring_budget(const McEstimate &estimate, double fraction, const std::string &what) {
    if (static_cast<double>(estimate.censored) > fraction * static_cast<double>(estimate.trials)) {
        fail(ErrorCode::Censoring, what + ": " + std::to_string(estimate.censored) + " of " +
                                       std::to_string(estimate.trials) + " trials censored at horizon " +
                                       std::to_string(estimate.horizon));
    }
}

Calibration calibrate_threshold(double target, const DensityPair &pair, const NetworkConfig &config,
                                const McOptions &options, double tolerance_rel) {
    if (!(target >= 10.0)) {
        fail(ErrorCode::Parameter, "calibration target must be >= 10");
    }
    if (!(tolerance_rel > 0.0 && tolerance_rel < 1.0)) {
        fail(ErrorCode::Parameter, "calibration tolerance must lie in (0, 1)");
    }
    McOptions opts = options;
    if (opts.horizon == 0) {
        opts.horizon = static_cast<std::uint64_t>(std::ceil(50.0 * target));
    }
    check_mc_options(opts);

    const std::size_t transients = config.transient_count();
    // rho = 1/b must stay inside (0, 1).
    const double floor = transients > 0 ? std::nextafter(1.0, 2.0) : 0.0;
    auto params_for = [&](double b) { return DetectorParams::with_inverse_rho(b, transients); };

    Calibration result;
    auto evaluate = [&](double b) {
        ++result.evaluations;
        return evaluate_mtfa_window(params_for(b), pair, config, opts, target, tolerance_rel);
    };
    auto accept = [&](double b, const Evaluation &e) {
        result.threshold = b;
        result.achieved = *e.estimate;
        return result;
    };

    const double log_target = std::log(target);
    double lo = std::max(log_target / 4.0, floor);
    double hi = 4.0 * log_target;

    Evaluation at_lo = evaluate(lo);
    if (at_lo.verdict == Verdict::Within) {
        return accept(lo, at_lo);
    }
    if (at_lo.verdict == Verdict::Above) {
        const double widened = std::max(lo / 4.0, floor);
        if (widened < lo) {
            lo = widened;
            at_lo = evaluate(lo);
            if (at_lo.verdict == Verdict::Within) {
                return accept(lo, at_lo);
            }
        }
        if (at_lo.verdict == Verdict::Above) {
            fail(ErrorCode::Calibration, "MTFA at the lower bracket b=" + std::to_string(lo) + " already exceeds target");
        }
    }
    Evaluation at_hi = evaluate(hi);
    if (at_hi.verdict == Verdict::Within) {
        return accept(hi, at_hi);
    }
    if (at_hi.verdict == Verdict::Below) {
        hi *= 4.0;
        at_hi = evaluate(hi);
        if (at_hi.verdict == Verdict::Within) {
            return accept(hi, at_hi);
        }
        if (at_hi.verdict == Verdict::Below) {
            fail(ErrorCode::Calibration, "MTFA at the upper bracket b=" + std::to_string(hi) + " stays below target");
        }
    }

    for (int iter = 0; iter < 200 && hi - lo > 1e-12 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const Evaluation e = evaluate(mid);
        if (e.verdict == Verdict::Within) {
            return accept(mid, e);
        }
        (e.verdict == Verdict::Below ? lo : hi) = mid;
    }
    fail(ErrorCode::Calibration, "bisection did not reach the tolerance window around target " + std::to_string(target));
}

ScalingConstants scaling_constants(std::span<const std::uint64_t> durations, double gamma, std::span<const double> kl) {
    if (!(gamma > 1.0)) {
        fail(ErrorCode::Parameter, "scaling constants need gamma > 1");
    }
    if (kl.size() != durations.size() + 1) {
        fail(ErrorCode::Parameter, "need one KL number per phase");
    }
    for (const double v : kl) {
        if (!(v > 0.0)) {
            fail(ErrorCode::Parameter, "KL numbers must be positive");
        }
    }
    const double log_gamma = std::log(gamma);
    ScalingConstants out;
    out.h = durations.size() + 1; // c_{n-m+1} is infinite
    double cumulative = 0.0;
    for (std::size_t i = 0; i < durations.size(); ++i) {
        out.c.push_back(static_cast<double>(durations[i]) * kl[i] / log_gamma);
    }
    for (std::size_t i = 0; i < out.c.size(); ++i) {
        cumulative += out.c[i];
        if (cumulative >= 1.0) {
            out.h = i + 1;
            break;
        }
    }
    return out;
}

double theory_delay(double gamma, std::span<const double> kl, const ScalingConstants &constants) {
    if (constants.h < 1 || constants.h > kl.size() || constants.c.size() + 1 != kl.size()) {
        fail(ErrorCode::Parameter, "scaling constants do not match the KL ladder");
    }
    double transient = 0.0;
    double used = 0.0;
    for (std::size_t i = 0; i + 1 < constants.h; ++i) {
        transient += constants.c[i] / kl[i];
        used += constants.c[i];
    }
    return std::log(gamma) * (transient + (1.0 - used) / kl[constants.h - 1]);
}

std::string policy_kind_name(PolicyKind kind) {
    switch (kind) {
    case PolicyKind::Prefix:
        return "prefix";
    case PolicyKind::Rotating:
        return "rotating";
    case PolicyKind::Uniform:
        return "uniform";
    }
    return "uniform";
}

PolicyKind parse_policy_kind(const std::string &name) {
    if (name == "prefix") {
        return PolicyKind::Prefix;
    }
    if (name == "rotating") {
        return PolicyKind::Rotating;
    }
    if (name == "uniform") {
        return PolicyKind::Uniform;
    }
    fail(ErrorCode::Config, "unknown trajectory policy '" + name + "' (expected prefix, rotating or uniform)");
}

TrajectoryPolicy make_policy(PolicyKind kind) {
    switch (kind) {
    case PolicyKind::Prefix:
        return PrefixTrajectory{};
    case PolicyKind::Rotating:
        return RotatingTrajectory{};
    case PolicyKind::Uniform:
        return UniformTrajectory{};
    }
    return UniformTrajectory{};
}

std::uint64_t mtfa_seed(std::uint64_t master) noexcept { return derive_seed(master, 1); }
std::uint64_t wadd_seed(std::uint64_t master) noexcept { return derive_seed(master, 2); }
std::uint64_t kl_seed(std::uint64_t master) noexcept { return derive_seed(master, 3); }

std::vector<double> kl_ladder(const DensityPair &pair, const NetworkConfig &config, std::uint64_t trials,
                              std::uint64_t seed, unsigned workers) {
    std::vector<double> out;
    for (std::size_t phase = 1; phase <= config.phase_count(); ++phase) {
        out.push_back(estimate_kl(pair, config, phase, trials, derive_seed(seed, phase), workers).estimate);
    }
    return out;
}

std::uint64_t default_mtfa_horizon(double gamma, bool calibrated) {
    return static_cast<std::uint64_t>(std::ceil((calibrated ? 50.0 : 2000.0) * gamma));
}

std::vector<CurveRow> curve(const CurveRequest &request) {
    if (request.gamma_grid.empty() || !std::is_sorted(request.gamma_grid.begin(), request.gamma_grid.end())) {
        fail(ErrorCode::Parameter, "gamma grid must be non-empty and ascending");
    }
    const NetworkConfig truth = request.truth.value_or(request.detector);
    if (truth.sensors() != request.detector.sensors()) {
        fail(ErrorCode::Config, "true model and detector disagree on the number of sensors");
    }
    const PhaseSchedule schedule(1, request.durations);
    schedule.check_against(truth);

    const std::vector<double> kl = kl_ladder(request.pair, truth, request.kl_trials, kl_seed(request.seed),
                                             request.workers);

    std::vector<CurveRow> rows;
    for (const double gamma : request.gamma_grid) {
        CurveRow row;
        row.gamma_target = gamma;
        row.calibrated = request.calibrate;
        McOptions mtfa_opts{request.mtfa_trials, request.mtfa_horizon, mtfa_seed(request.seed), request.workers};
        if (mtfa_opts.horizon == 0) {
            mtfa_opts.horizon = default_mtfa_horizon(gamma, request.calibrate);
        }

        std::optional<DetectorParams> params;
        if (request.calibrate) {
            const Calibration cal =
                calibrate_threshold(gamma, request.pair, request.detector, mtfa_opts, request.tolerance);
            params = DetectorParams::with_inverse_rho(cal.threshold, request.detector.transient_count());
            row.mtfa = cal.achieved;
        } else {
            params = DetectorParams::defaults(gamma, request.detector);
            row.mtfa = estimate_mtfa(*params, request.pair, request.detector, mtfa_opts);
        }
        row.threshold = params->threshold();
        row.rho = params->rho();
        enforce_censoring_budget(row.mtfa, request.censoring_budget, "MTFA run");

        row.theory_wadd = theory_delay(gamma, kl, scaling_constants(request.durations, gamma, kl));

        McOptions wadd_opts{request.wadd_trials, request.wadd_horizon, wadd_seed(request.seed), request.workers};
        if (wadd_opts.horizon == 0) {
            wadd_opts.horizon = static_cast<std::uint64_t>(std::ceil(100.0 * row.theory_wadd));
        }
        const WaddScenario scenario{truth, schedule, make_policy(request.policy)};
        row.wadd = estimate_wadd(*params, request.pair, request.detector, scenario, wadd_opts);
        enforce_censoring_budget(row.wadd, request.censoring_budget, "WADD run");
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace wdcusum
