#include "wdcusum/model.hpp"

#include <algorithm>
#include <numeric>

#include "wdcusum/error.hpp"

namespace wdcusum {

NetworkConfig::NetworkConfig(std::size_t sensors, std::size_t initial_size, std::size_t final_size)
    : sensors_(sensors), initial_size_(initial_size), final_size_(final_size) {
    if (initial_size < 1 || initial_size > final_size || final_size > sensors) {
        fail(ErrorCode::Config, "network config needs 1 <= m <= n <= L, got L=" + std::to_string(sensors) +
                                    " m=" + std::to_string(initial_size) + " n=" + std::to_string(final_size));
    }
}

std::size_t NetworkConfig::anomaly_size(std::size_t phase) const {
    if (phase > phase_count()) {
        fail(ErrorCode::Domain, "phase " + std::to_string(phase) + " out of range 0.." + std::to_string(phase_count()));
    }
    return phase == 0 ? 0 : initial_size_ + phase - 1;
}

PhaseSchedule PhaseSchedule::never() { return PhaseSchedule(); }

PhaseSchedule::PhaseSchedule(std::uint64_t first_change, std::vector<std::uint64_t> durations)
    : first_change_(first_change), durations_(std::move(durations)) {
    if (first_change < 1) {
        fail(ErrorCode::Config, "first changepoint must be >= 1");
    }
}

std::size_t PhaseSchedule::phase_at(std::uint64_t k) const {
    if (!first_change_ || k < *first_change_) {
        return 0;
    }
    std::uint64_t boundary = *first_change_;
    for (std::size_t i = 0; i < durations_.size(); ++i) {
        boundary += durations_[i];
        if (k < boundary) {
            return i + 1;
        }
    }
    return durations_.size() + 1;
}

std::optional<std::uint64_t> PhaseSchedule::phase_start(std::size_t phase) const {
    if (!first_change_ || phase == 0 || phase > durations_.size() + 1) {
        return std::nullopt;
    }
    std::uint64_t start = *first_change_;
    for (std::size_t i = 0; i + 1 < phase; ++i) {
        start += durations_[i];
    }
    return start;
}

void PhaseSchedule::check_against(const NetworkConfig &config) const {
    if (!is_never() && durations_.size() != config.transient_count()) {
        fail(ErrorCode::Config, "schedule has " + std::to_string(durations_.size()) + " transient durations, config needs " +
                                    std::to_string(config.transient_count()));
    }
}

std::string policy_name(const TrajectoryPolicy &policy) {
    struct Visitor {
        std::string operator()(const PrefixTrajectory &) const { return "prefix"; }
        std::string operator()(const FixedTrajectory &) const { return "fixed"; }
        std::string operator()(const UniformTrajectory &) const { return "uniform"; }
        std::string operator()(const RotatingTrajectory &) const { return "rotating"; }
    };
    return std::visit(Visitor{}, policy);
}

namespace {

void rotating_set(std::size_t sensors, std::size_t size, std::uint64_t k, std::vector<std::size_t> &out) {
    out.resize(size);
    for (std::size_t j = 0; j < size; ++j) {
        out[j] = static_cast<std::size_t>((k - 1 + j) % sensors);
    }
    std::sort(out.begin(), out.end());
}

} // namespace

FixedTrajectory rotating_trajectory(const NetworkConfig &config, const PhaseSchedule &schedule, std::uint64_t length) {
    auto sets = std::make_shared<std::vector<std::vector<std::size_t>>>();
    sets->reserve(length);
    const std::size_t sensors = config.sensors();
    for (std::uint64_t k = 1; k <= length; ++k) {
        const std::size_t size = config.anomaly_size(schedule.phase_at(k));
        std::vector<std::size_t> set;
        rotating_set(sensors, size, k, set);
        sets->push_back(std::move(set));
    }
    return FixedTrajectory{std::move(sets)};
}

namespace {

// Partial Fisher-Yates over 0..sensors-1; leaves the sorted subset in `affected`.
void draw_uniform_subset(std::size_t sensors, std::size_t size, RandomSource &placement,
                         std::vector<std::size_t> &affected) {
    affected.resize(sensors);
    std::iota(affected.begin(), affected.end(), std::size_t{0});
    for (std::size_t i = 0; i < size; ++i) {
        const std::size_t j = i + placement.below(sensors - i);
        std::swap(affected[i], affected[j]);
    }
    affected.resize(size);
    std::sort(affected.begin(), affected.end());
}

void fill_values(const DensityPair &pair, std::span<const std::size_t> affected, RandomSource &noise,
                 std::span<double> values) {
    std::size_t next = 0;
    for (std::size_t l = 0; l < values.size(); ++l) {
        const bool hit = next < affected.size() && affected[next] == l;
        if (hit) {
            ++next;
        }
        values[l] = (hit ? pair.post() : pair.pre()).sample(noise);
    }
}

} // namespace

void sample_mixture_observation(const DensityPair &pair, std::size_t sensors, std::size_t size, RandomSource &noise,
                                RandomSource &placement, std::span<double> values,
                                std::vector<std::size_t> &affected) {
    if (size > sensors || values.size() != sensors) {
        fail(ErrorCode::Config, "mixture observation needs size <= L and a buffer of length L");
    }
    draw_uniform_subset(sensors, size, placement, affected);
    fill_values(pair, affected, noise, values);
}

void gen_observation(const DensityPair &pair, const NetworkConfig &config, const PhaseSchedule &schedule,
                     const TrajectoryPolicy &policy, std::uint64_t k, RandomSource &noise, RandomSource &placement,
                     Observation &out) {
    const std::size_t sensors = config.sensors();
    out.time = k;
    out.values.resize(sensors);
    out.phase = schedule.phase_at(k);
    const std::size_t size = config.anomaly_size(out.phase);

    out.affected.clear();
    if (out.phase > 0) {
        if (std::holds_alternative<PrefixTrajectory>(policy)) {
            out.affected.resize(size);
            std::iota(out.affected.begin(), out.affected.end(), std::size_t{0});
        } else if (std::holds_alternative<UniformTrajectory>(policy)) {
            draw_uniform_subset(sensors, size, placement, out.affected);
        } else if (std::holds_alternative<RotatingTrajectory>(policy)) {
            rotating_set(sensors, size, k, out.affected);
        } else {
            const auto &table = std::get<FixedTrajectory>(policy).sets;
            if (!table || k > table->size()) {
                fail(ErrorCode::Config, "fixed trajectory has no set for time " + std::to_string(k));
            }
            out.affected = (*table)[k - 1];
            std::sort(out.affected.begin(), out.affected.end());
            const bool distinct = std::adjacent_find(out.affected.begin(), out.affected.end()) == out.affected.end();
            const bool in_range = out.affected.empty() || out.affected.back() < sensors;
            if (out.affected.size() != size || !distinct || !in_range) {
                fail(ErrorCode::Config, "fixed trajectory set at time " + std::to_string(k) + " must hold " +
                                            std::to_string(size) + " distinct sensors below " + std::to_string(sensors));
            }
        }
    }
    fill_values(pair, out.affected, noise, out.values);
}

ObservationStream::ObservationStream(DensityPair pair, NetworkConfig config, PhaseSchedule schedule,
                                     TrajectoryPolicy policy, std::uint64_t seed)
    : pair_(std::move(pair)), config_(config), schedule_(std::move(schedule)), policy_(std::move(policy)),
      noise_(derive_seed(seed, 0)), placement_(derive_seed(seed, 1)) {
    schedule_.check_against(config_);
}

const Observation &ObservationStream::next() {
    gen_observation(pair_, config_, schedule_, policy_, current_.time + 1, noise_, placement_, current_);
    return current_;
}

} // namespace wdcusum
