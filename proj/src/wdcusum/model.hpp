#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wdcusum/distributions.hpp"
#include "wdcusum/rng.hpp"

namespace wdcusum {

// L sensors; the anomaly starts with m affected sensors and grows to n.
class NetworkConfig {
public:
    // Requires 1 <= m <= n <= L.
    NetworkConfig(std::size_t sensors, std::size_t initial_size, std::size_t final_size);

    std::size_t sensors() const noexcept { return sensors_; }
    std::size_t initial_size() const noexcept { return initial_size_; }
    std::size_t final_size() const noexcept { return final_size_; }

    // n - m + 1 post-change phases, the last one persistent.
    std::size_t phase_count() const noexcept { return final_size_ - initial_size_ + 1; }
    std::size_t transient_count() const noexcept { return final_size_ - initial_size_; }

    // 0 for the pre-change phase, m + i - 1 for phase i >= 1.
    std::size_t anomaly_size(std::size_t phase) const;

    bool operator==(const NetworkConfig &) const = default;

private:
    std::size_t sensors_;
    std::size_t initial_size_;
    std::size_t final_size_;
};

// First changepoint and transient durations. Changepoint i+1 sits d_i steps
// after changepoint i; the last phase never ends.
class PhaseSchedule {
public:
    // Pure pre-change regime: phase_at is 0 forever.
    static PhaseSchedule never();

    PhaseSchedule(std::uint64_t first_change, std::vector<std::uint64_t> durations);

    bool is_never() const noexcept { return !first_change_.has_value(); }
    std::optional<std::uint64_t> first_change() const noexcept { return first_change_; }
    const std::vector<std::uint64_t> &durations() const noexcept { return durations_; }

    // Phase index at time k >= 1. Zero-length transients are skipped.
    std::size_t phase_at(std::uint64_t k) const;

    // Start time of phase i >= 1, empty when the schedule is "never".
    std::optional<std::uint64_t> phase_start(std::size_t phase) const;

    // Throws unless durations.size() == config.transient_count() (ignored for "never").
    void check_against(const NetworkConfig &config) const;

private:
    PhaseSchedule() = default;

    std::optional<std::uint64_t> first_change_;
    std::vector<std::uint64_t> durations_;
};

// Anomaly occupies sensors 1..m+i-1 during phase i.
struct PrefixTrajectory {};

// Each step draws the affected set uniformly among all subsets of the phase
// size, independently across steps. This is also the mixture-model generator.
struct UniformTrajectory {};

// Explicit 0-based sensor sets; sets->at(k-1) is used at time k. Entries for
// pre-change times are never consulted.
struct FixedTrajectory {
    std::shared_ptr<const std::vector<std::vector<std::size_t>>> sets;
};

// Deterministic sweep: at time k the set is {(k-1+j) mod L : j < size}.
// Equivalent to rotating_trajectory() without a length bound.
struct RotatingTrajectory {};

using TrajectoryPolicy = std::variant<PrefixTrajectory, FixedTrajectory, UniformTrajectory, RotatingTrajectory>;

std::string policy_name(const TrajectoryPolicy &policy);

// The RotatingTrajectory sets tabulated as an explicit trajectory for k = 1..length.
FixedTrajectory rotating_trajectory(const NetworkConfig &config, const PhaseSchedule &schedule, std::uint64_t length);

struct Observation {
    std::uint64_t time = 0;
    std::vector<double> values;
    std::size_t phase = 0;
    std::vector<std::size_t> affected; // sorted, 0-based
};

// Draws one observation of `size` affected sensors chosen uniformly, i.e. a
// sample from the phase mixture density. `affected` receives the sorted set.
void sample_mixture_observation(const DensityPair &pair, std::size_t sensors, std::size_t size, RandomSource &noise,
                                RandomSource &placement, std::span<double> values,
                                std::vector<std::size_t> &affected);

// Fills `out` for time k. Sensor values come from `noise` only (one draw per
// sensor per step); `placement` is touched only by the uniform policy after the
// first changepoint.
void gen_observation(const DensityPair &pair, const NetworkConfig &config, const PhaseSchedule &schedule,
                     const TrajectoryPolicy &policy, std::uint64_t k, RandomSource &noise, RandomSource &placement,
                     Observation &out);

// Lazy, unbounded X[1], X[2], ... Deterministic in `seed`.
class ObservationStream {
public:
    ObservationStream(DensityPair pair, NetworkConfig config, PhaseSchedule schedule, TrajectoryPolicy policy,
                      std::uint64_t seed);

    const Observation &next();

    const NetworkConfig &config() const noexcept { return config_; }

private:
    DensityPair pair_;
    NetworkConfig config_;
    PhaseSchedule schedule_;
    TrajectoryPolicy policy_;
    RandomSource noise_;
    RandomSource placement_;
    Observation current_;
};

} // namespace wdcusum
