#include "wdcusum/distributions.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "wdcusum/error.hpp"

namespace wdcusum {

DensityModel::DensityModel(Gaussian g) : family_(g) {
    log_norm_ = -0.5 * std::log(2.0 * std::numbers::pi * g.variance);
    inv_two_var_ = 0.5 / g.variance;
    stddev_ = std::sqrt(g.variance);
}

DensityModel DensityModel::gaussian(double mean, double variance) {
    if (!std::isfinite(mean) || !std::isfinite(variance) || !(variance > 0.0)) {
        fail(ErrorCode::Config, "gaussian density needs a finite mean and a positive finite variance, got mean=" +
                                    std::to_string(mean) + " variance=" + std::to_string(variance));
    }
    return DensityModel(Gaussian{mean, variance});
}

double DensityModel::log_pdf(double x) const {
    const auto &g = std::get<Gaussian>(family_);
    const double dx = x - g.mean;
    return log_norm_ - dx * dx * inv_two_var_;
}

double DensityModel::sample(RandomSource &rng) const {
    const auto &g = std::get<Gaussian>(family_);
    return g.mean + stddev_ * rng.standard_normal();
}

DensityPair::DensityPair(DensityModel pre, DensityModel post) : DensityPair(std::move(pre), std::move(post), true) {}

DensityPair::DensityPair(DensityModel pre, DensityModel post, bool validate)
    : pre_(std::move(pre)), post_(std::move(post)) {
    if (validate && pre_ == post_) {
        fail(ErrorCode::Config, "pre- and post-change densities are identical (zero KL divergence)");
    }
}

DensityPair DensityPair::without_validation(DensityModel pre, DensityModel post) {
    return DensityPair(std::move(pre), std::move(post), false);
}

void DensityPair::per_sensor_llr(std::span<const double> x, std::span<double> out) const {
    if (out.size() != x.size()) {
        fail(ErrorCode::Config, "llr output length " + std::to_string(out.size()) + " does not match observation length " +
                                    std::to_string(x.size()));
    }
    for (std::size_t l = 0; l < x.size(); ++l) {
        out[l] = llr(x[l]);
    }
}

std::vector<double> DensityPair::per_sensor_llr(std::span<const double> x) const {
    std::vector<double> out(x.size());
    per_sensor_llr(x, out);
    return out;
}

} // namespace wdcusum
