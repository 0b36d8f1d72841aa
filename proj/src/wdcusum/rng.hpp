#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace wdcusum {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Seed splitting rule: substream `index` of `master` is seeded with
// splitmix64(splitmix64(master) + index). Trial t of any Monte Carlo run uses
// derive_seed(run_seed, t), so a single trial can be replayed in isolation.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

    double standard_normal() { return normal_(engine_); }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    // Uniform integer in [0, n).
    std::size_t below(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

} // namespace wdcusum
