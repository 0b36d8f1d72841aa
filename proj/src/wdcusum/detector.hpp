#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wdcusum/distributions.hpp"
#include "wdcusum/mixture.hpp"
#include "wdcusum/model.hpp"

namespace wdcusum {

// Transition weights rho_1..rho_{n-m} and threshold b. The conventions
// rho_0 = 1 and rho_{n-m+1} = 0 are implicit: they only ever appear as
// log rho_0 = 0 and log(1 - rho_{n-m+1}) = 0.
class DetectorParams {
public:
    // Requires every rho in (0, 1) and threshold >= 0.
    DetectorParams(double threshold, std::vector<double> rho);

    // b = log(gamma), rho_i = 1/b. Requires log(gamma) > 1.
    static DetectorParams defaults(double gamma, const NetworkConfig &config);

    // rho_i = 1/b for a given b (b > 1 whenever there are transients).
    static DetectorParams with_inverse_rho(double threshold, std::size_t transient_count);

    double threshold() const noexcept { return threshold_; }
    const std::vector<double> &rho() const noexcept { return rho_; }
    std::size_t phase_count() const noexcept { return rho_.size() + 1; }

    // sum_{r=from}^{to-1} log rho_r for 0 <= from <= to <= phase_count().
    double transition(std::size_t from, std::size_t to) const { return transitions_[from * stride_ + to]; }

    // log(1 - rho_i) for phase i >= 1; zero for the persistent phase.
    double stay(std::size_t phase) const { return stay_[phase]; }

    DetectorParams with_threshold(double threshold) const;

private:
    double threshold_;
    std::vector<double> rho_;
    std::size_t stride_ = 0;
    std::vector<double> transitions_;
    std::vector<double> stay_;
};

struct DetectorState {
    std::vector<double> omega; // indices 0..n-m+1, omega[0] pinned to 0
    double statistic = 0.0;    // W[k]
    std::uint64_t time = 0;
};

DetectorState init_state(const NetworkConfig &config);

// One step of the recursion. All previous omega values are read before any
// is written. `llrs[i-1]` is the mixture llr of phase i.
DetectorState update(const DetectorState &state, const DetectorParams &params, std::span<const double> llrs);

// In-place variant; `scratch` is resized as needed.
void update_in_place(DetectorState &state, const DetectorParams &params, std::span<const double> llrs,
                     std::vector<double> &scratch);

// Stateful detector that owns its llr evaluator and buffers.
class Detector {
public:
    Detector(DensityPair pair, NetworkConfig config, DetectorParams params);

    // Throws ErrorCode::Config on a length mismatch.
    const DetectorState &step(std::span<const double> x);

    bool alarmed() const noexcept { return state_.statistic >= params_.threshold(); }
    const DetectorState &state() const noexcept { return state_; }
    const DetectorParams &params() const noexcept { return params_; }
    const NetworkConfig &config() const noexcept { return evaluator_.config(); }
    void reset();

private:
    PhaseLlrEvaluator evaluator_;
    DetectorParams params_;
    DetectorState state_;
    std::vector<double> llrs_;
    std::vector<double> scratch_;
};

DetectorState step(const DetectorState &state, const DetectorParams &params, const DensityPair &pair,
                   const NetworkConfig &config, std::span<const double> x);

// First k <= horizon with W[k] >= b, or a censored outcome with time == horizon.
struct RunOutcome {
    bool stopped = false;
    std::uint64_t time = 0;
};

RunOutcome run_until_stop(ObservationStream &stream, const DetectorParams &params, const DensityPair &pair,
                          const NetworkConfig &config, std::uint64_t horizon);

// Same loop on an existing detector, which is reset first.
RunOutcome run_until_stop(ObservationStream &stream, Detector &detector, std::uint64_t horizon);

} // namespace wdcusum
