#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracle/oracle.hpp"
#include "wdcusum/detector.hpp"
#include "wdcusum/error.hpp"

using namespace wdcusum;

namespace {

DensityPair standard_pair() { return DensityPair(DensityModel::gaussian(0.0, 1.0), DensityModel::gaussian(1.0, 1.0)); }

oracle::Observations random_observations(RandomSource &rng, std::size_t steps, std::size_t sensors) {
    oracle::Observations obs(steps, std::vector<double>(sensors));
    for (auto &row : obs) {
        for (auto &v : row) {
            v = 0.5 + 1.5 * rng.standard_normal();
        }
    }
    return obs;
}

std::vector<double> random_rho(RandomSource &rng, std::size_t count) {
    std::vector<double> rho(count);
    for (auto &r : rho) {
        r = 0.05 + 0.9 * rng.uniform();
    }
    return rho;
}

std::vector<double> w_path(const oracle::Observations &obs, const DetectorParams &params, const DensityPair &pair,
                           const NetworkConfig &config) {
    Detector detector(pair, config, params);
    std::vector<double> out;
    for (const auto &x : obs) {
        out.push_back(detector.step(x).statistic);
    }
    return out;
}

} // namespace

TEST(DetectorParams, Defaults) {
    const NetworkConfig config(3, 1, 3);
    const auto p = DetectorParams::defaults(std::exp(10.0), config);
    EXPECT_NEAR(p.threshold(), 10.0, 1e-12);
    ASSERT_EQ(p.rho().size(), 2u);
    EXPECT_NEAR(p.rho()[0], 0.1, 1e-13);
    EXPECT_NEAR(p.rho()[1], 0.1, 1e-13);

    const auto q = DetectorParams::defaults(1e4, config);
    EXPECT_NEAR(q.threshold(), 9.210340371976184, 1e-12);
    EXPECT_NEAR(q.rho()[0], 0.10857362047581294, 1e-12);

    EXPECT_THROW(DetectorParams::defaults(2.0, config), Error);
    EXPECT_THROW(DetectorParams::defaults(std::exp(1.0), config), Error);
}

TEST(DetectorParams, Validation) {
    EXPECT_THROW(DetectorParams(-1.0, {}), Error);
    EXPECT_THROW(DetectorParams(1.0, {0.0}), Error);
    EXPECT_THROW(DetectorParams(1.0, {1.0}), Error);
    EXPECT_THROW(DetectorParams(std::nan(""), {}), Error);
    EXPECT_NO_THROW(DetectorParams(0.0, {0.5}));
    EXPECT_THROW(Detector(standard_pair(), NetworkConfig(3, 1, 3), DetectorParams(1.0, {0.5})), Error);
}

TEST(DetectorParams, TransitionTable) {
    const DetectorParams p(3.0, {0.2, 0.5});
    EXPECT_EQ(p.transition(0, 0), 0.0);
    EXPECT_EQ(p.transition(0, 1), 0.0);
    EXPECT_NEAR(p.transition(0, 3), std::log(0.2) + std::log(0.5), 1e-15);
    EXPECT_NEAR(p.transition(1, 2), std::log(0.2), 1e-15);
    EXPECT_NEAR(p.stay(1), std::log(0.8), 1e-15);
    EXPECT_NEAR(p.stay(2), std::log(0.5), 1e-15);
    EXPECT_EQ(p.stay(3), 0.0);
}

TEST(InitState, Shapes) {
    const auto s = init_state(NetworkConfig(3, 1, 3));
    EXPECT_EQ(s.omega, std::vector<double>(4, 0.0));
    EXPECT_EQ(s.statistic, 0.0);
    EXPECT_EQ(s.time, 0u);
    EXPECT_EQ(init_state(NetworkConfig(4, 2, 2)).omega.size(), 2u);
}

TEST(Update, FirstStepFromFreshState) {
    const NetworkConfig config(2, 1, 2);
    const DetectorParams params(5.0, {0.1});
    const std::vector<double> llrs{0.0, 0.0};
    const auto s = update(init_state(config), params, llrs);
    EXPECT_EQ(s.omega[0], 0.0);
    EXPECT_NEAR(s.omega[1], std::log(0.9), 1e-15);
    // Omega^(2)[0] = 0 makes the j = 2 term free on the first step.
    EXPECT_NEAR(s.omega[2], 0.0, 1e-15);
    EXPECT_EQ(s.statistic, 0.0);
    EXPECT_EQ(s.time, 1u);

    std::vector<double> scratch;
    auto in_place = init_state(config);
    update_in_place(in_place, params, llrs, scratch);
    EXPECT_EQ(in_place.omega, s.omega);

    const std::vector<double> wrong{0.0};
    EXPECT_THROW(update_in_place(in_place, params, wrong, scratch), Error);
}

TEST(Update, SinglePhaseIsClassicalCusum) {
    const NetworkConfig config(1, 1, 1);
    const DetectorParams params(5.0, {});
    auto s = init_state(config);
    const std::vector<double> llr_seq{0.4, -1.0, -0.3, 2.0, 0.1};
    double w = 0.0;
    for (const double l : llr_seq) {
        const double expected = std::max(w, 0.0) + l;
        const std::vector<double> llrs{l};
        s = update(s, params, llrs);
        EXPECT_NEAR(s.omega[1], expected, 1e-15);
        w = expected;
        EXPECT_EQ(s.statistic, std::max(w, 0.0));
    }
}

TEST(Update, LargePositiveInputsIncreaseStatistic) {
    RandomSource rng(5);
    const NetworkConfig config(4, 1, 3);
    const DetectorParams params(5.0, {0.3, 0.6});
    auto s = init_state(config);
    for (int k = 0; k < 50; ++k) {
        std::vector<double> llrs(3);
        for (auto &l : llrs) {
            l = 2.0 + 3.0 * rng.uniform();
        }
        const auto next = update(s, params, llrs);
        ASSERT_GT(next.statistic, s.statistic);
        s = next;
    }
}

TEST(Step, GoldenTrace) {
    std::ifstream in(std::string(WDCUSUM_TEST_DATA) + "/step_golden.csv");
    ASSERT_TRUE(in) << "missing golden file";
    std::string line;
    std::getline(in, line);
    const NetworkConfig config(2, 1, 2);
    const DetectorParams params(5.0, {0.2});
    const auto pair = standard_pair();
    auto state = init_state(config);
    oracle::Observations seen;
    int rows = 0;
    while (std::getline(in, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        double k, x1, x2, w;
        fields >> k >> x1 >> x2 >> w;
        const std::vector<double> x{x1, x2};
        seen.push_back(x);
        state = step(state, params, pair, config, x);
        EXPECT_NEAR(state.statistic, w, 1e-9) << "k=" << k;
        EXPECT_NEAR(state.statistic, oracle::batch_statistic(seen, params, pair, config), 1e-9);
        ++rows;
    }
    EXPECT_EQ(rows, 5);
}

TEST(Step, LengthMismatch) {
    const NetworkConfig config(3, 1, 2);
    const std::vector<double> x{0.0, 0.0};
    EXPECT_THROW(step(init_state(config), DetectorParams(1.0, {0.5}), standard_pair(), config, x), Error);
}

TEST(Step, ZeroObservationsDriftDown) {
    for (const auto &config : {NetworkConfig(3, 1, 3), NetworkConfig(2, 1, 2), NetworkConfig(5, 2, 4)}) {
        Detector detector(standard_pair(), config, DetectorParams::with_inverse_rho(5.0, config.transient_count()));
        const std::vector<double> zeros(config.sensors(), 0.0);
        double peak = 0.0;
        for (int k = 0; k < 10000; ++k) {
            peak = std::max(peak, detector.step(zeros).statistic);
        }
        EXPECT_LT(peak, 5.0);
        EXPECT_FALSE(detector.alarmed());
    }
}

TEST(RunUntilStop, ZeroThresholdStopsImmediately) {
    const NetworkConfig config(3, 1, 3);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ObservationStream stream(standard_pair(), config, PhaseSchedule::never(), UniformTrajectory{}, seed);
        const auto out = run_until_stop(stream, DetectorParams(0.0, {0.5, 0.5}), standard_pair(), config, 100);
        EXPECT_TRUE(out.stopped);
        EXPECT_EQ(out.time, 1u);
    }
}

TEST(RunUntilStop, HugeShiftStopsWithinTwoSteps) {
    const DensityPair pair(DensityModel::gaussian(0.0, 1.0), DensityModel::gaussian(10.0, 1.0));
    const NetworkConfig config(3, 1, 3);
    const PhaseSchedule schedule(1, {9, 10});
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        ObservationStream stream(pair, config, schedule, UniformTrajectory{}, seed);
        const auto out = run_until_stop(stream, DetectorParams::with_inverse_rho(5.0, 2), pair, config, 100);
        ASSERT_TRUE(out.stopped);
        ASSERT_LE(out.time, 2u);
    }
}

TEST(RunUntilStop, CensoringAndGuards) {
    const NetworkConfig config(2, 1, 2);
    ObservationStream stream(standard_pair(), config, PhaseSchedule::never(), UniformTrajectory{}, 1);
    const auto out = run_until_stop(stream, DetectorParams(1e6, {0.5}), standard_pair(), config, 25);
    EXPECT_FALSE(out.stopped);
    EXPECT_EQ(out.time, 25u);
    EXPECT_THROW(run_until_stop(stream, DetectorParams(1.0, {0.5}), standard_pair(), config, 0), Error);

    ObservationStream wide(standard_pair(), NetworkConfig(3, 1, 2), PhaseSchedule::never(), UniformTrajectory{}, 1);
    EXPECT_THROW(run_until_stop(wide, DetectorParams(1.0, {0.5}), standard_pair(), config, 5), Error);
}

TEST(RunUntilStop, ThresholdMonotonicityOnCommonPath) {
    const NetworkConfig config(3, 1, 3);
    const PhaseSchedule schedule(1, {9, 10});
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::uint64_t previous = 0;
        for (const double b : {1.0, 3.0, 6.0, 9.0}) {
            ObservationStream stream(standard_pair(), config, schedule, UniformTrajectory{}, seed);
            const auto out = run_until_stop(stream, DetectorParams(b, {0.2, 0.2}), standard_pair(), config, 5000);
            ASSERT_TRUE(out.stopped);
            ASSERT_GE(out.time, previous);
            previous = out.time;
        }
    }
}

TEST(Properties, StatisticNonNegativeAndPermutationInvariant) {
    RandomSource rng(77);
    std::mt19937_64 shuffler(77);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t sensors = 2 + rng.below(6);
        const std::size_t m = 1 + rng.below(sensors);
        const std::size_t n = m + rng.below(std::min<std::size_t>(sensors - m, 3) + 1);
        const NetworkConfig config(sensors, m, n);
        const DetectorParams params(4.0, random_rho(rng, config.transient_count()));
        auto obs = random_observations(rng, 40, sensors);
        std::vector<std::size_t> perm(sensors);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), shuffler);
        auto permuted = obs;
        for (std::size_t t = 0; t < obs.size(); ++t) {
            for (std::size_t l = 0; l < sensors; ++l) {
                permuted[t][l] = obs[t][perm[l]];
            }
        }
        const auto a = w_path(obs, params, standard_pair(), config);
        const auto b = w_path(permuted, params, standard_pair(), config);
        for (std::size_t t = 0; t < a.size(); ++t) {
            ASSERT_GE(a[t], 0.0);
            ASSERT_NEAR(a[t], b[t], 1e-12);
        }
    }
}

TEST(Properties, SinglePhaseMatchesIndependentCusum) {
    RandomSource rng(88);
    for (std::size_t sensors = 1; sensors <= 6; ++sensors) {
        for (std::size_t m = 1; m <= sensors; ++m) {
            const NetworkConfig config(sensors, m, m);
            const auto obs = random_observations(rng, 60, sensors);
            const auto expected = oracle::single_phase_cusum(obs, standard_pair(), config);
            const auto actual = w_path(obs, DetectorParams(3.0, {}), standard_pair(), config);
            for (std::size_t t = 0; t < obs.size(); ++t) {
                ASSERT_NEAR(actual[t], expected[t], 1e-12);
            }
        }
    }
}

TEST(Properties, RecursionMatchesPathEnumeration) {
    RandomSource rng(99);
    struct Case {
        std::size_t sensors, m, n, k;
    };
    for (const Case c : {Case{3, 1, 2, 6}, Case{4, 1, 3, 8}, Case{2, 2, 2, 8}, Case{4, 2, 4, 7}}) {
        const NetworkConfig config(c.sensors, c.m, c.n);
        for (int rep = 0; rep < 100; ++rep) {
            const DetectorParams params(5.0, random_rho(rng, config.transient_count()));
            const auto obs = random_observations(rng, c.k, c.sensors);
            const auto path = w_path(obs, params, standard_pair(), config);
            for (std::size_t t = 1; t <= c.k; ++t) {
                const oracle::Observations prefix(obs.begin(), obs.begin() + static_cast<std::ptrdiff_t>(t));
                ASSERT_NEAR(path[t - 1], oracle::batch_statistic(prefix, params, standard_pair(), config), 1e-9)
                    << "L=" << c.sensors << " m=" << c.m << " n=" << c.n << " t=" << t;
            }
        }
    }
}
