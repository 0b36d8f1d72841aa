#pragma once

#include <span>
#include <variant>
#include <vector>

#include "wdcusum/rng.hpp"

namespace wdcusum {

struct Gaussian {
    double mean;
    double variance;

    bool operator==(const Gaussian &) const = default;
};

// Univariate density with log-domain evaluation. Only the Gaussian family
// ships; new families extend the variant.
class DensityModel {
public:
    using Family = std::variant<Gaussian>;

    static DensityModel gaussian(double mean, double variance);

    double log_pdf(double x) const;

    // Gaussian draws consume exactly one standard normal from `rng`, whatever
    // the parameters, so pre- and post-change sensors advance the source in
    // lock step.
    double sample(RandomSource &rng) const;

    const Family &family() const noexcept { return family_; }

    bool operator==(const DensityModel &other) const { return family_ == other.family_; }

private:
    explicit DensityModel(Gaussian g);

    Family family_;
    double log_norm_ = 0.0;
    double inv_two_var_ = 0.0;
    double stddev_ = 0.0;
};

// Pre-change density g and post-change density f, shared by every sensor.
class DensityPair {
public:
    // Throws ErrorCode::Config when pre == post.
    DensityPair(DensityModel pre, DensityModel post);

    // Skips the pre != post guard. Test fixtures only.
    static DensityPair without_validation(DensityModel pre, DensityModel post);

    const DensityModel &pre() const noexcept { return pre_; }
    const DensityModel &post() const noexcept { return post_; }

    // log f(x) - log g(x)
    double llr(double x) const { return post_.log_pdf(x) - pre_.log_pdf(x); }

    void per_sensor_llr(std::span<const double> x, std::span<double> out) const;
    std::vector<double> per_sensor_llr(std::span<const double> x) const;

private:
    DensityPair(DensityModel pre, DensityModel post, bool validate);

    DensityModel pre_;
    DensityModel post_;
};

} // namespace wdcusum
