#include "wdcusum/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wdcusum/error.hpp"
#include "wdcusum/parallel.hpp"

namespace wdcusum {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double log_add_exp(double a, double b) noexcept {
    if (a == kNegInf) {
        return b;
    }
    if (b == kNegInf) {
        return a;
    }
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(-std::abs(a - b)));
}

double log_binomial(std::size_t n, std::size_t k) {
    if (k > n) {
        fail(ErrorCode::Domain, "log_binomial: k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
    }
    k = std::min(k, n - k);
    double acc = 0.0;
    for (std::size_t t = 1; t <= k; ++t) {
        acc += std::log(static_cast<double>(n - k + t) / static_cast<double>(t));
    }
    return acc;
}

void log_elementary_symmetric(std::span<const double> llrs, std::span<double> out) {
    if (out.empty()) {
        return;
    }
    const std::size_t max_order = out.size() - 1;
    out[0] = 0.0;
    std::fill(out.begin() + 1, out.end(), kNegInf);
    for (std::size_t t = 0; t < llrs.size(); ++t) {
        const double r = llrs[t];
        const std::size_t top = std::min(t + 1, max_order);
        for (std::size_t s = top; s >= 1; --s) {
            out[s] = log_add_exp(out[s], out[s - 1] + r);
        }
    }
}

double log_elementary_symmetric(std::span<const double> llrs, std::size_t order) {
    if (order > llrs.size()) {
        fail(ErrorCode::Domain, "elementary symmetric order " + std::to_string(order) + " exceeds input length " +
                                    std::to_string(llrs.size()));
    }
    std::vector<double> table(order + 1);
    log_elementary_symmetric(llrs, table);
    return table[order];
}

double mixture_llr(std::span<const double> llrs, std::size_t size) {
    if (size < 1 || size > llrs.size()) {
        fail(ErrorCode::Domain, "mixture size " + std::to_string(size) + " outside 1.." + std::to_string(llrs.size()));
    }
    return log_elementary_symmetric(llrs, size) - log_binomial(llrs.size(), size);
}

PhaseLlrEvaluator::PhaseLlrEvaluator(DensityPair pair, NetworkConfig config)
    : pair_(std::move(pair)), config_(config), llrs_(config.sensors()), esp_(config.final_size() + 1) {
    for (std::size_t phase = 1; phase <= config_.phase_count(); ++phase) {
        log_binomials_.push_back(log_binomial(config_.sensors(), config_.anomaly_size(phase)));
    }
}

void PhaseLlrEvaluator::evaluate(std::span<const double> x, std::span<double> out) {
    if (x.size() != config_.sensors()) {
        fail(ErrorCode::Config, "observation has " + std::to_string(x.size()) + " components, network has " +
                                    std::to_string(config_.sensors()) + " sensors");
    }
    if (out.size() != config_.phase_count()) {
        fail(ErrorCode::Config, "phase llr buffer has wrong length");
    }
    pair_.per_sensor_llr(x, llrs_);
    log_elementary_symmetric(llrs_, esp_);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = esp_[config_.initial_size() + i] - log_binomials_[i];
    }
}

std::vector<double> PhaseLlrEvaluator::evaluate(std::span<const double> x) {
    std::vector<double> out(config_.phase_count());
    evaluate(x, out);
    return out;
}

std::vector<double> phase_llrs(const DensityPair &pair, const NetworkConfig &config, std::span<const double> x) {
    PhaseLlrEvaluator evaluator(pair, config);
    return evaluator.evaluate(x);
}

KlEstimate estimate_kl(const DensityPair &pair, const NetworkConfig &config, std::size_t phase, std::uint64_t trials,
                       std::uint64_t seed, unsigned workers) {
    if (trials < 1000) {
        fail(ErrorCode::Parameter, "estimate_kl needs at least 1000 trials");
    }
    if (phase < 1 || phase > config.phase_count()) {
        fail(ErrorCode::Domain, "phase " + std::to_string(phase) + " outside 1.." + std::to_string(config.phase_count()));
    }
    const std::size_t sensors = config.sensors();
    const std::size_t size = config.anomaly_size(phase);
    const double log_norm = log_binomial(sensors, size);

    std::vector<double> samples(trials);
    parallel_for(0, trials, workers, [&](std::size_t t) {
        const std::uint64_t trial_seed = derive_seed(seed, t);
        RandomSource noise(derive_seed(trial_seed, 0));
        RandomSource placement(derive_seed(trial_seed, 1));
        std::vector<double> x(sensors);
        std::vector<std::size_t> affected;
        sample_mixture_observation(pair, sensors, size, noise, placement, x, affected);
        std::vector<double> llrs = pair.per_sensor_llr(x);
        samples[t] = log_elementary_symmetric(llrs, size) - log_norm;
    });

    const double n = static_cast<double>(trials);
    const double mean = compensated_sum(samples) / n;
    std::vector<double> sq(trials);
    std::transform(samples.begin(), samples.end(), sq.begin(), [mean](double v) { return (v - mean) * (v - mean); });
    const double var = compensated_sum(sq) / (n - 1.0);

    KlEstimate out;
    out.phase = phase;
    out.size = size;
    out.estimate = mean;
    out.std_error = std::sqrt(var / n);
    out.trials = trials;
    out.seed = seed;
    return out;
}

} // namespace wdcusum
