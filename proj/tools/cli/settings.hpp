#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace wdcli {

// Everything a subcommand needs, after the config file and the command line
// have been merged. Serialized into every manifest; replay runs from it.
struct Settings {
    std::string command;

    double pre_mean = 0.0;
    double pre_variance = 1.0;
    double post_mean = 1.0;
    double post_variance = 1.0;

    std::uint32_t sensors = 0;
    std::uint32_t initial_size = 0;
    std::uint32_t final_size = 0;
    std::uint32_t true_initial_size = 0; // 0 = same as the detector
    std::uint32_t true_final_size = 0;

    std::vector<std::uint64_t> durations;
    std::uint64_t nu1 = 1; // 0 = never
    std::uint64_t steps = 0;
    std::string policy = "uniform";

    std::vector<double> gamma;
    std::optional<double> threshold;
    std::vector<double> rho;

    std::uint64_t mtfa_trials = 10000;
    std::uint64_t wadd_trials = 10000;
    std::uint64_t kl_trials = 100000;
    std::uint64_t mtfa_horizon = 0;
    std::uint64_t wadd_horizon = 0;
    bool calibrate = false;
    double tolerance = 0.05;
    double censoring_budget = 0.001;
    std::optional<std::uint64_t> seed;
    unsigned workers = 0;

    std::uint32_t phase = 0; // kl: 0 = every phase
    bool full_trace = false; // detect: keep going after the alarm

    std::string input;  // detect: empty or "-" = stdin
    std::string output; // empty or "-" = stdout
};

// Reads sections [pair], [network], [truth], [schedule], [grid] and [run] of a
// key = value file into `s`. Unknown sections or keys are configuration errors.
void load_config(const std::string &path, Settings &s);

// Accepts plain numbers and e^x.
double parse_gamma(const std::string &text);
std::vector<double> parse_gamma_list(const std::string &text);

nlohmann::json to_json(const Settings &s);
Settings settings_from_json(const nlohmann::json &j);

} // namespace wdcli
