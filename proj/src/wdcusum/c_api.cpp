#include "wdcusum/wdcusum.h"

#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "wdcusum/detector.hpp"
#include "wdcusum/error.hpp"
#include "wdcusum/experiments.hpp"
#include "wdcusum/mixture.hpp"
#include "wdcusum/model.hpp"

struct wdc_pair {
    wdcusum::DensityPair pair;
};

struct wdc_trajectory {
    std::vector<std::vector<std::size_t>> sets;
};

struct wdc_stream {
    wdcusum::ObservationStream stream;
    std::vector<std::uint32_t> affected;
};

struct wdc_detector {
    wdcusum::Detector detector;
};

struct wdc_curve {
    std::vector<wdcusum::CurveRow> rows;
};

namespace {

using namespace wdcusum;

thread_local std::string last_error;

template <class Fn>
wdc_status guarded(Fn &&fn) noexcept {
    try {
        fn();
        last_error.clear();
        return WDC_OK;
    } catch (const Error &e) {
        last_error = e.what();
        return static_cast<wdc_status>(e.code());
    } catch (const std::bad_alloc &) {
        last_error = "out of memory";
        return WDC_ERR_INTERNAL;
    } catch (const std::exception &e) {
        last_error = e.what();
        return WDC_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown failure";
        return WDC_ERR_INTERNAL;
    }
}

template <class... Ptrs>
void require(const Ptrs *...ptrs) {
    if (((ptrs == nullptr) || ...)) {
        fail(ErrorCode::NullArgument, "required argument is NULL");
    }
}

void require_capacity(std::size_t have, std::size_t need) {
    if (have < need) {
        fail(ErrorCode::BufferTooSmall, "output buffer holds " + std::to_string(have) + " values, needs " + std::to_string(need));
    }
}

NetworkConfig to_config(const wdc_network *network) {
    return NetworkConfig(network->sensors, network->initial_size, network->final_size);
}

PhaseSchedule to_schedule(const wdc_schedule *schedule) {
    if (schedule->first_change == 0) {
        return PhaseSchedule::never();
    }
    if (schedule->duration_count > 0) {
        require(schedule->durations);
    }
    return PhaseSchedule(schedule->first_change, std::vector<std::uint64_t>(schedule->durations,
                                                                            schedule->durations + schedule->duration_count));
}

TrajectoryPolicy to_policy(wdc_policy_kind kind, const wdc_trajectory *trajectory) {
    switch (kind) {
    case WDC_POLICY_PREFIX:
        return PrefixTrajectory{};
    case WDC_POLICY_ROTATING:
        return RotatingTrajectory{};
    case WDC_POLICY_UNIFORM:
        return UniformTrajectory{};
    case WDC_POLICY_FIXED:
        require(trajectory);
        return FixedTrajectory{std::make_shared<const std::vector<std::vector<std::size_t>>>(trajectory->sets)};
    }
    fail(ErrorCode::Config, "unknown trajectory policy " + std::to_string(static_cast<int>(kind)));
}

PolicyKind to_policy_kind(wdc_policy_kind kind) {
    switch (kind) {
    case WDC_POLICY_PREFIX:
        return PolicyKind::Prefix;
    case WDC_POLICY_ROTATING:
        return PolicyKind::Rotating;
    case WDC_POLICY_UNIFORM:
        return PolicyKind::Uniform;
    case WDC_POLICY_FIXED:
        break;
    }
    fail(ErrorCode::Config, "curve runs support the prefix, rotating and uniform policies");
}

DetectorParams to_params(const wdc_params *params) {
    if (params->rho_count > 0) {
        require(params->rho);
    }
    return DetectorParams(params->threshold, std::vector<double>(params->rho, params->rho + params->rho_count));
}

McOptions to_options(const wdc_mc_options *options) {
    return McOptions{options->trials, options->horizon, options->seed, options->workers};
}

wdc_mc_estimate to_c(const McEstimate &e) {
    return wdc_mc_estimate{e.mean, e.std_error, e.trials, e.censored, e.horizon, e.seed};
}

McEstimate from_c(const wdc_mc_estimate &e) {
    McEstimate out;
    out.mean = e.mean;
    out.std_error = e.std_error;
    out.trials = e.trials;
    out.censored = e.censored;
    out.horizon = e.horizon;
    out.seed = e.seed;
    return out;
}

} // namespace

extern "C" {

const char *wdc_version(void) { return "0.1.0"; }

const char *wdc_status_name(wdc_status status) {
    switch (status) {
    case WDC_OK:
        return "ok";
    case WDC_ERR_CONFIG:
        return "config error";
    case WDC_ERR_PARAMETER:
        return "parameter error";
    case WDC_ERR_DOMAIN:
        return "domain error";
    case WDC_ERR_CALIBRATION:
        return "calibration failure";
    case WDC_ERR_CENSORING:
        return "censoring budget exceeded";
    case WDC_ERR_IO:
        return "I/O error";
    case WDC_ERR_BUDGET:
        return "enumeration budget exceeded";
    case WDC_ERR_NULL_ARGUMENT:
        return "null argument";
    case WDC_ERR_BUFFER_TOO_SMALL:
        return "buffer too small";
    case WDC_ERR_INTERNAL:
        return "internal error";
    }
    return "unknown status";
}

const char *wdc_last_error(void) { return last_error.c_str(); }

wdc_status wdc_pair_create_gaussian(double pre_mean, double pre_variance, double post_mean, double post_variance,
                                    wdc_pair **out) {
    return guarded([&] {
        require(out);
        *out = new wdc_pair{DensityPair(DensityModel::gaussian(pre_mean, pre_variance),
                                        DensityModel::gaussian(post_mean, post_variance))};
    });
}

void wdc_pair_destroy(wdc_pair *pair) { delete pair; }

wdc_status wdc_pair_llr(const wdc_pair *pair, const double *x, size_t count, double *out) {
    return guarded([&] {
        require(pair, x, out);
        pair->pair.per_sensor_llr(std::span<const double>(x, count), std::span<double>(out, count));
    });
}

wdc_status wdc_mixture_llr(const double *llrs, size_t count, size_t size, double *out) {
    return guarded([&] {
        require(llrs, out);
        *out = mixture_llr(std::span<const double>(llrs, count), size);
    });
}

wdc_status wdc_phase_llrs(const wdc_pair *pair, const wdc_network *network, const double *x, size_t count, double *out,
                          size_t out_count) {
    return guarded([&] {
        require(pair, network, x, out);
        const NetworkConfig config = to_config(network);
        require_capacity(out_count, config.phase_count());
        PhaseLlrEvaluator evaluator(pair->pair, config);
        evaluator.evaluate(std::span<const double>(x, count), std::span<double>(out, config.phase_count()));
    });
}

wdc_status wdc_estimate_kl(const wdc_pair *pair, const wdc_network *network, size_t phase, uint64_t trials,
                           uint64_t seed, unsigned workers, wdc_kl_estimate *out) {
    return guarded([&] {
        require(pair, network, out);
        const KlEstimate e = estimate_kl(pair->pair, to_config(network), phase, trials, seed, workers);
        *out = wdc_kl_estimate{e.phase, e.size, e.estimate, e.std_error, e.trials, e.seed};
    });
}

wdc_status wdc_trajectory_create(wdc_trajectory **out) {
    return guarded([&] {
        require(out);
        *out = new wdc_trajectory{};
    });
}

wdc_status wdc_trajectory_append(wdc_trajectory *trajectory, const uint32_t *sensors, size_t count) {
    return guarded([&] {
        require(trajectory);
        if (count > 0) {
            require(sensors);
        }
        trajectory->sets.emplace_back(sensors, sensors + count);
    });
}

wdc_status wdc_trajectory_rotating(const wdc_network *network, const wdc_schedule *schedule, uint64_t length,
                                   wdc_trajectory **out) {
    return guarded([&] {
        require(network, schedule, out);
        const FixedTrajectory table = rotating_trajectory(to_config(network), to_schedule(schedule), length);
        *out = new wdc_trajectory{*table.sets};
    });
}

void wdc_trajectory_destroy(wdc_trajectory *trajectory) { delete trajectory; }

wdc_status wdc_stream_create(const wdc_pair *pair, const wdc_network *network, const wdc_schedule *schedule,
                             wdc_policy_kind policy, const wdc_trajectory *trajectory, uint64_t seed, wdc_stream **out) {
    return guarded([&] {
        require(pair, network, schedule, out);
        *out = new wdc_stream{ObservationStream(pair->pair, to_config(network), to_schedule(schedule),
                                                to_policy(policy, trajectory), seed),
                              {}};
    });
}

wdc_status wdc_stream_next(wdc_stream *stream, wdc_observation *out) {
    return guarded([&] {
        require(stream, out);
        const Observation &obs = stream->stream.next();
        stream->affected.assign(obs.affected.begin(), obs.affected.end());
        *out = wdc_observation{obs.time,  obs.values.data(),         obs.values.size(),
                               obs.phase, stream->affected.data(), stream->affected.size()};
    });
}

void wdc_stream_destroy(wdc_stream *stream) { delete stream; }

wdc_status wdc_default_params(double gamma, const wdc_network *network, double *threshold, double *rho,
                              size_t rho_capacity) {
    return guarded([&] {
        require(network, threshold);
        const NetworkConfig config = to_config(network);
        const DetectorParams params = DetectorParams::defaults(gamma, config);
        require_capacity(rho_capacity, params.rho().size());
        if (!params.rho().empty()) {
            require(rho);
        }
        *threshold = params.threshold();
        std::copy(params.rho().begin(), params.rho().end(), rho);
    });
}

wdc_status wdc_detector_create(const wdc_pair *pair, const wdc_network *network, const wdc_params *params,
                               wdc_detector **out) {
    return guarded([&] {
        require(pair, network, params, out);
        *out = new wdc_detector{Detector(pair->pair, to_config(network), to_params(params))};
    });
}

wdc_status wdc_detector_step(wdc_detector *detector, const double *x, size_t count, int *alarm) {
    return guarded([&] {
        require(detector, x);
        detector->detector.step(std::span<const double>(x, count));
        if (alarm != nullptr) {
            *alarm = detector->detector.alarmed() ? 1 : 0;
        }
    });
}

wdc_status wdc_detector_statistic(const wdc_detector *detector, double *w) {
    return guarded([&] {
        require(detector, w);
        *w = detector->detector.state().statistic;
    });
}

wdc_status wdc_detector_omega(const wdc_detector *detector, double *out, size_t capacity, size_t *count) {
    return guarded([&] {
        require(detector);
        const auto &omega = detector->detector.state().omega;
        const std::size_t phases = omega.size() - 1;
        if (count != nullptr) {
            *count = phases;
        }
        require_capacity(capacity, phases);
        require(out);
        std::copy(omega.begin() + 1, omega.end(), out);
    });
}

wdc_status wdc_detector_time(const wdc_detector *detector, uint64_t *time) {
    return guarded([&] {
        require(detector, time);
        *time = detector->detector.state().time;
    });
}

wdc_status wdc_detector_reset(wdc_detector *detector) {
    return guarded([&] {
        require(detector);
        detector->detector.reset();
    });
}

void wdc_detector_destroy(wdc_detector *detector) { delete detector; }

wdc_status wdc_estimate_mtfa(const wdc_pair *pair, const wdc_network *network, const wdc_params *params,
                             const wdc_mc_options *options, wdc_mc_estimate *out) {
    return guarded([&] {
        require(pair, network, params, options, out);
        *out = to_c(estimate_mtfa(to_params(params), pair->pair, to_config(network), to_options(options)));
    });
}

wdc_status wdc_estimate_wadd(const wdc_pair *pair, const wdc_network *network, const wdc_params *params,
                             const wdc_network *truth, const wdc_schedule *schedule, wdc_policy_kind policy,
                             const wdc_trajectory *trajectory, const wdc_mc_options *options, wdc_mc_estimate *out) {
    return guarded([&] {
        require(pair, network, params, schedule, options, out);
        const NetworkConfig config = to_config(network);
        const WaddScenario scenario{truth != nullptr ? to_config(truth) : config, to_schedule(schedule),
                                    to_policy(policy, trajectory)};
        *out = to_c(estimate_wadd(to_params(params), pair->pair, config, scenario, to_options(options)));
    });
}

wdc_status wdc_check_censoring(const wdc_mc_estimate *estimate, double fraction) {
    return guarded([&] {
        require(estimate);
        enforce_censoring_budget(from_c(*estimate), fraction, "Monte Carlo run");
    });
}

wdc_status wdc_calibrate_threshold(const wdc_pair *pair, const wdc_network *network, double target,
                                   const wdc_mc_options *options, double tolerance_rel, double *threshold,
                                   wdc_mc_estimate *achieved) {
    return guarded([&] {
        require(pair, network, options, threshold);
        const Calibration cal =
            calibrate_threshold(target, pair->pair, to_config(network), to_options(options), tolerance_rel);
        *threshold = cal.threshold;
        if (achieved != nullptr) {
            *achieved = to_c(cal.achieved);
        }
    });
}

wdc_status wdc_scaling_constants(const uint64_t *durations, size_t duration_count, double gamma, const double *kl,
                                 size_t kl_count, double *c_out, size_t *h) {
    return guarded([&] {
        require(kl, h);
        if (duration_count > 0) {
            require(durations, c_out);
        }
        const ScalingConstants sc = scaling_constants(std::span<const std::uint64_t>(durations, duration_count), gamma,
                                                      std::span<const double>(kl, kl_count));
        std::copy(sc.c.begin(), sc.c.end(), c_out);
        *h = sc.h;
    });
}

wdc_status wdc_theory_delay(double gamma, const double *kl, size_t kl_count, const double *c, size_t c_count, size_t h,
                            double *out) {
    return guarded([&] {
        require(kl, out);
        if (c_count > 0) {
            require(c);
        }
        ScalingConstants sc;
        sc.c.assign(c, c + c_count);
        sc.h = h;
        *out = theory_delay(gamma, std::span<const double>(kl, kl_count), sc);
    });
}

wdc_status wdc_curve_run(const wdc_pair *pair, const wdc_curve_request *request, wdc_curve **out) {
    return guarded([&] {
        require(pair, request, out, request->detector);
        if (request->gamma_count > 0) {
            require(request->gamma_grid);
        }
        if (request->duration_count > 0) {
            require(request->durations);
        }
        CurveRequest req;
        req.gamma_grid.assign(request->gamma_grid, request->gamma_grid + request->gamma_count);
        req.pair = pair->pair;
        req.detector = to_config(request->detector);
        if (request->truth != nullptr) {
            req.truth = to_config(request->truth);
        }
        req.durations.assign(request->durations, request->durations + request->duration_count);
        req.policy = to_policy_kind(request->policy);
        req.mtfa_trials = request->mtfa_trials;
        req.wadd_trials = request->wadd_trials;
        req.mtfa_horizon = request->mtfa_horizon;
        req.wadd_horizon = request->wadd_horizon;
        req.kl_trials = request->kl_trials;
        req.calibrate = request->calibrate != 0;
        req.tolerance = request->tolerance;
        req.censoring_budget = request->censoring_budget;
        req.seed = request->seed;
        req.workers = request->workers;
        *out = new wdc_curve{curve(req)};
    });
}

size_t wdc_curve_size(const wdc_curve *curve) { return curve == nullptr ? 0 : curve->rows.size(); }

wdc_status wdc_curve_row_at(const wdc_curve *curve, size_t index, wdc_curve_row *out) {
    return guarded([&] {
        require(curve, out);
        if (index >= curve->rows.size()) {
            fail(ErrorCode::Domain, "curve row index out of range");
        }
        const CurveRow &row = curve->rows[index];
        *out = wdc_curve_row{row.gamma_target,
                             row.threshold,
                             row.rho.empty() ? std::numeric_limits<double>::quiet_NaN() : row.rho.front(),
                             row.calibrated ? 1 : 0,
                             to_c(row.mtfa),
                             to_c(row.wadd),
                             row.theory_wadd};
    });
}

void wdc_curve_destroy(wdc_curve *curve) { delete curve; }

uint64_t wdc_derive_seed(uint64_t master, uint64_t index) { return derive_seed(master, index); }
uint64_t wdc_mtfa_seed(uint64_t master) { return mtfa_seed(master); }
uint64_t wdc_wadd_seed(uint64_t master) { return wadd_seed(master); }
uint64_t wdc_kl_seed(uint64_t master) { return kl_seed(master); }

} // extern "C"
