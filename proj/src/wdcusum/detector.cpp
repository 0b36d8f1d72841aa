#include "wdcusum/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wdcusum/error.hpp"

namespace wdcusum {

DetectorParams::DetectorParams(double threshold, std::vector<double> rho) : threshold_(threshold), rho_(std::move(rho)) {
    if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
        fail(ErrorCode::Parameter, "threshold must be finite and non-negative, got " + std::to_string(threshold));
    }
    for (const double r : rho_) {
        if (!(r > 0.0 && r < 1.0)) {
            fail(ErrorCode::Parameter, "transition weight " + std::to_string(r) + " outside (0, 1)");
        }
    }
    const std::size_t phases = rho_.size() + 1;
    stride_ = phases + 1;

    // log rho_r for r = 0..phases-1, with log rho_0 = 0.
    std::vector<double> log_rho(phases, 0.0);
    for (std::size_t r = 1; r < phases; ++r) {
        log_rho[r] = std::log(rho_[r - 1]);
    }
    transitions_.assign(stride_ * stride_, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t from = 0; from <= phases; ++from) {
        double acc = 0.0;
        transitions_[from * stride_ + from] = 0.0;
        for (std::size_t to = from + 1; to <= phases; ++to) {
            acc += log_rho[to - 1];
            transitions_[from * stride_ + to] = acc;
        }
    }
    stay_.assign(phases + 1, 0.0);
    for (std::size_t i = 1; i < phases; ++i) {
        stay_[i] = std::log1p(-rho_[i - 1]);
    }
}

DetectorParams DetectorParams::defaults(double gamma, const NetworkConfig &config) {
    const double b = std::log(gamma);
    if (!(b > 1.0)) {
        fail(ErrorCode::Parameter, "gamma must exceed e so that rho = 1/log(gamma) lies in (0, 1), got gamma=" +
                                       std::to_string(gamma));
    }
    return with_inverse_rho(b, config.transient_count());
}

DetectorParams DetectorParams::with_inverse_rho(double threshold, std::size_t transient_count) {
    if (transient_count > 0 && !(threshold > 1.0)) {
        fail(ErrorCode::Parameter, "rho = 1/b needs b > 1, got b=" + std::to_string(threshold));
    }
    return DetectorParams(threshold, std::vector<double>(transient_count, 1.0 / threshold));
}

DetectorParams DetectorParams::with_threshold(double threshold) const { return DetectorParams(threshold, rho_); }

DetectorState init_state(const NetworkConfig &config) {
    DetectorState state;
    state.omega.assign(config.phase_count() + 1, 0.0);
    return state;
}

void update_in_place(DetectorState &state, const DetectorParams &params, std::span<const double> llrs,
                     std::vector<double> &scratch) {
    const std::size_t phases = params.phase_count();
    if (state.omega.size() != phases + 1 || llrs.size() != phases) {
        fail(ErrorCode::Config, "detector state, params and llr table disagree on the number of phases");
    }
    scratch.assign(state.omega.begin(), state.omega.end());
    scratch[0] = 0.0;
    double w = 0.0;
    for (std::size_t i = 1; i <= phases; ++i) {
        double best = scratch[0] + params.transition(0, i);
        for (std::size_t j = 1; j <= i; ++j) {
            best = std::max(best, scratch[j] + params.transition(j, i));
        }
        const double value = best + llrs[i - 1] + params.stay(i);
        state.omega[i] = value;
        w = std::max(w, value);
    }
    state.omega[0] = 0.0;
    state.statistic = w;
    ++state.time;
}

DetectorState update(const DetectorState &state, const DetectorParams &params, std::span<const double> llrs) {
    DetectorState next = state;
    std::vector<double> scratch;
    update_in_place(next, params, llrs, scratch);
    return next;
}

Detector::Detector(DensityPair pair, NetworkConfig config, DetectorParams params)
    : evaluator_(std::move(pair), config), params_(std::move(params)), state_(init_state(config)),
      llrs_(config.phase_count()) {
    if (params_.phase_count() != config.phase_count()) {
        fail(ErrorCode::Config, "detector params carry " + std::to_string(params_.rho().size()) +
                                    " transition weights, config needs " + std::to_string(config.transient_count()));
    }
}

const DetectorState &Detector::step(std::span<const double> x) {
    evaluator_.evaluate(x, llrs_);
    update_in_place(state_, params_, llrs_, scratch_);
    return state_;
}

void Detector::reset() { state_ = init_state(evaluator_.config()); }

DetectorState step(const DetectorState &state, const DetectorParams &params, const DensityPair &pair,
                   const NetworkConfig &config, std::span<const double> x) {
    return update(state, params, phase_llrs(pair, config, x));
}

RunOutcome run_until_stop(ObservationStream &stream, Detector &detector, std::uint64_t horizon) {
    if (horizon < 1) {
        fail(ErrorCode::Parameter, "horizon must be >= 1");
    }
    if (stream.config().sensors() != detector.config().sensors()) {
        fail(ErrorCode::Config, "stream and detector disagree on the number of sensors");
    }
    detector.reset();
    for (std::uint64_t k = 1; k <= horizon; ++k) {
        detector.step(stream.next().values);
        if (detector.alarmed()) {
            return RunOutcome{true, k};
        }
    }
    return RunOutcome{false, horizon};
}

RunOutcome run_until_stop(ObservationStream &stream, const DetectorParams &params, const DensityPair &pair,
                          const NetworkConfig &config, std::uint64_t horizon) {
    Detector detector(pair, config, params);
    return run_until_stop(stream, detector, horizon);
}

} // namespace wdcusum
