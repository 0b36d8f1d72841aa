#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wdcusum/distributions.hpp"
#include "wdcusum/model.hpp"

namespace wdcusum {

// log(exp(a) + exp(b)) as max + log1p(exp(-|a - b|)); -inf is the identity.
double log_add_exp(double a, double b) noexcept;

// log C(n, k), summed term by term.
double log_binomial(std::size_t n, std::size_t k);

// out[s] = log e_s(exp(llrs[0]), ..., exp(llrs[L-1])) for s = 0..out.size()-1,
// by the triangular recursion E_t[s] = logaddexp(E_{t-1}[s], E_{t-1}[s-1] + llr_t)
// swept in ascending sensor order. Raw ratios are never formed.
void log_elementary_symmetric(std::span<const double> llrs, std::span<double> out);

// Throws ErrorCode::Domain when order > L.
double log_elementary_symmetric(std::span<const double> llrs, std::size_t order);

// log of the mean, over all size-`size` sensor subsets, of the product of the
// members' likelihood ratios: log e_size - log C(L, size). Requires 1 <= size <= L.
double mixture_llr(std::span<const double> llrs, std::size_t size);

// Per-phase mixture log-likelihood ratios for one observation; entry i-1 is the
// value for phase i (anomaly size m + i - 1). One shared DP pass up to order n.
class PhaseLlrEvaluator {
public:
    PhaseLlrEvaluator(DensityPair pair, NetworkConfig config);

    void evaluate(std::span<const double> x, std::span<double> out);
    std::vector<double> evaluate(std::span<const double> x);

    const NetworkConfig &config() const noexcept { return config_; }
    const DensityPair &pair() const noexcept { return pair_; }

private:
    DensityPair pair_;
    NetworkConfig config_;
    std::vector<double> log_binomials_; // indexed by phase - 1
    std::vector<double> llrs_;
    std::vector<double> esp_;
};

std::vector<double> phase_llrs(const DensityPair &pair, const NetworkConfig &config, std::span<const double> x);

struct KlEstimate {
    std::size_t phase = 0;
    std::size_t size = 0;
    double estimate = 0.0; // nats
    double std_error = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
};

// Monte Carlo KL number of phase i: mean of the phase-i mixture llr under
// draws from the phase-i mixture model. Trial t uses derive_seed(seed, t).
// Requires trials >= 1000.
KlEstimate estimate_kl(const DensityPair &pair, const NetworkConfig &config, std::size_t phase, std::uint64_t trials,
                       std::uint64_t seed, unsigned workers = 0);

} // namespace wdcusum
