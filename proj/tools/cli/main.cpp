#include <chrono>
#include <cstring>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <wdcusum/wdcusum.h>

#include "commands.hpp"
#include "errors.hpp"
#include "settings.hpp"

using namespace wdcli;

namespace {

// Flags override the config file, which in turn overrides built-in defaults.
// The config is therefore loaded before CLI11 writes any flag values.
std::string find_config(int argc, char **argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) {
            return argv[i + 1];
        }
        if (arg.rfind("--config=", 0) == 0) {
            return arg.substr(9);
        }
    }
    return "";
}

struct Raw {
    std::string gamma;
    std::string nu1;
    std::uint64_t seed = 0;
    std::uint64_t trials = 0;
    std::uint64_t horizon = 0;
    std::string config;
    std::string manifest;
    std::string replay_manifest;
};

void add_common(CLI::App *sub, Settings &s, Raw &raw) {
    sub->add_option("--config", raw.config, "Key = value config file");
    sub->add_option("--L", s.sensors, "Number of sensors");
    sub->add_option("--m", s.initial_size, "Initial anomaly size");
    sub->add_option("--n", s.final_size, "Final anomaly size");
    sub->add_option("--pre-mean", s.pre_mean, "Pre-change Gaussian mean");
    sub->add_option("--pre-var", s.pre_variance, "Pre-change Gaussian variance");
    sub->add_option("--post-mean", s.post_mean, "Post-change Gaussian mean");
    sub->add_option("--post-var", s.post_variance, "Post-change Gaussian variance");
    sub->add_option("--out", s.output, "Output CSV path (default stdout)");
    sub->add_option("--manifest", raw.manifest, "Manifest path (default <out>.manifest.json)");
    sub->add_option("--workers", s.workers, "Worker threads, 0 = all cores");
}

void add_seed(CLI::App *sub, Raw &raw) { sub->add_option("--seed", raw.seed, "Master seed (required)"); }

void add_threshold(CLI::App *sub, Settings &s, Raw &raw) {
    sub->add_option("--gamma", raw.gamma, "Target MTFA values, comma separated; e^x accepted");
    sub->add_option_function<double>(
        "--threshold", [&s](double b) { s.threshold = b; }, "Explicit threshold b");
    sub->add_option("--rho", s.rho, "Transition weights rho_1..rho_{n-m}")->delimiter(',');
}

void add_schedule(CLI::App *sub, Settings &s) {
    sub->add_option("--d", s.durations, "Transient durations d_1..d_{n-m}")->delimiter(',');
    sub->add_option("--policy", s.policy, "Trajectory policy: prefix, rotating or uniform");
}

void add_truth(CLI::App *sub, Settings &s) {
    sub->add_option("--true-m", s.true_initial_size, "Initial size of the generating model");
    sub->add_option("--true-n", s.true_final_size, "Final size of the generating model");
}

void write_file(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    out.close();
    if (!out) {
        throw CliError(kIo, "cannot write " + path);
    }
}

bool given(CLI::App *sub, const std::string &name) {
    const CLI::Option *opt = sub->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
}

bool to_stdout(const std::string &path) { return path.empty() || path == "-"; }

int execute(const Settings &s, const nlohmann::json &provenance, const std::string &manifest_override) {
    const auto started = std::chrono::steady_clock::now();
    const Result r = run_command(s, std::cin);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    if (to_stdout(s.output)) {
        std::cout << r.csv << std::flush;
    } else {
        write_file(s.output, r.csv);
    }
    if (!r.note.empty()) {
        std::cerr << "wdcusum " << s.command << ": " << r.note << "\n";
    }

    std::string manifest_path = manifest_override;
    if (manifest_path.empty() && !to_stdout(s.output)) {
        manifest_path = s.output + ".manifest.json";
    }
    if (!manifest_path.empty()) {
        nlohmann::json m = provenance;
        m["tool"] = "wdcusum";
        m["version"] = wdc_version();
        m["subcommand"] = s.command;
        m["parameters"] = to_json(s);
        m["seed"] = s.seed ? nlohmann::json(*s.seed) : nlohmann::json(nullptr);
        m["outputs"] = nlohmann::json::array({to_stdout(s.output) ? "-" : s.output});
        m["exit_code"] = r.exit_code;
        m["duration_seconds"] = seconds;
        write_file(manifest_path, m.dump(2) + "\n");
    }
    return r.exit_code;
}

Settings load_manifest(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw CliError(kIo, "cannot open manifest " + path);
    }
    nlohmann::json m;
    try {
        in >> m;
    } catch (const nlohmann::json::exception &e) {
        config_error("manifest " + path + " is not valid JSON: " + e.what());
    }
    if (!m.contains("parameters")) {
        config_error("manifest " + path + " has no parameters");
    }
    return settings_from_json(m.at("parameters"));
}

} // namespace

int main(int argc, char **argv) {
    Settings s;
    Raw raw;
    CLI::App app{"Mixture-WD-CuSum detection of a growing, moving anomaly in a sensor network"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(wdc_version()));

    try {
        const std::string config = find_config(argc, argv);
        if (!config.empty()) {
            load_config(config, s);
        }
    } catch (const CliError &e) {
        std::cerr << "wdcusum: " << e.what() << "\n";
        return e.exit_code();
    }

    auto *gen = app.add_subcommand("gen", "Generate a labeled observation stream");
    add_common(gen, s, raw);
    add_seed(gen, raw);
    add_schedule(gen, s);
    gen->add_option("--nu1", raw.nu1, "First changepoint (or 'never')");
    gen->add_option("--steps", s.steps, "Number of time steps");

    auto *detect = app.add_subcommand("detect", "Run the detector over a stream CSV");
    add_common(detect, s, raw);
    add_threshold(detect, s, raw);
    detect->add_option("--in", s.input, "Input stream CSV (default stdin)");
    detect->add_flag("--full-trace", s.full_trace, "Keep going after the first alarm");

    auto *kl = app.add_subcommand("kl", "Estimate the KL number of each phase");
    add_common(kl, s, raw);
    add_seed(kl, raw);
    kl->add_option("--trials", s.kl_trials, "Monte Carlo samples per phase");
    kl->add_option("--phase", s.phase, "Single phase to estimate (default all)");

    auto *mtfa = app.add_subcommand("mtfa", "Estimate the mean time to false alarm");
    add_common(mtfa, s, raw);
    add_seed(mtfa, raw);
    add_threshold(mtfa, s, raw);
    mtfa->add_option("--trials", s.mtfa_trials, "Monte Carlo trials");
    mtfa->add_option("--horizon", s.mtfa_horizon, "Censoring horizon (default 2000 x gamma)");
    mtfa->add_option("--censoring-budget", s.censoring_budget, "Tolerated censored fraction");

    auto *wadd = app.add_subcommand("wadd", "Estimate the worst-case detection delay at nu1 = 1");
    add_common(wadd, s, raw);
    add_seed(wadd, raw);
    add_threshold(wadd, s, raw);
    add_schedule(wadd, s);
    add_truth(wadd, s);
    wadd->add_option("--trials", s.wadd_trials, "Monte Carlo trials");
    wadd->add_option("--horizon", s.wadd_horizon, "Censoring horizon (default 100 x theory delay)");
    wadd->add_option("--kl-trials", s.kl_trials, "Samples per KL number for the theory column");
    wadd->add_option("--censoring-budget", s.censoring_budget, "Tolerated censored fraction");

    auto *calibrate = app.add_subcommand("calibrate", "Find the threshold whose MTFA matches a target");
    add_common(calibrate, s, raw);
    add_seed(calibrate, raw);
    calibrate->add_option("--gamma", raw.gamma, "Target MTFA values, comma separated; e^x accepted");
    calibrate->add_option("--trials", s.mtfa_trials, "Monte Carlo trials per evaluation");
    calibrate->add_option("--horizon", s.mtfa_horizon, "Censoring horizon (default 50 x target)");
    calibrate->add_option("--tolerance", s.tolerance, "Relative tolerance on the achieved MTFA");
    calibrate->add_option("--censoring-budget", s.censoring_budget, "Tolerated censored fraction");

    auto *curve = app.add_subcommand("curve", "WADD versus MTFA over a gamma grid");
    add_common(curve, s, raw);
    add_seed(curve, raw);
    add_schedule(curve, s);
    add_truth(curve, s);
    curve->add_option("--gamma", raw.gamma, "Gamma grid, comma separated; e^x accepted");
    curve->add_option("--mtfa-trials", s.mtfa_trials, "MTFA trials per grid point");
    curve->add_option("--wadd-trials", s.wadd_trials, "WADD trials per grid point");
    curve->add_option("--kl-trials", s.kl_trials, "Samples per KL number");
    curve->add_option("--mtfa-horizon", s.mtfa_horizon, "MTFA horizon (default 50 x gamma calibrated, else 2000 x gamma)");
    curve->add_option("--wadd-horizon", s.wadd_horizon, "WADD horizon (default 100 x theory delay)");
    curve->add_flag("--calibrate,!--no-calibrate", s.calibrate, "Use MTFA-calibrated thresholds");
    curve->add_option("--tolerance", s.tolerance, "Calibration tolerance");
    curve->add_option("--censoring-budget", s.censoring_budget, "Tolerated censored fraction");

    auto *replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
    replay->add_option("manifest_file", raw.replay_manifest, "Manifest JSON of the run to repeat")->required();
    replay->add_option("--out", s.output, "Write here instead of the recorded output path");
    replay->add_option("--manifest", raw.manifest, "Manifest path for the replayed run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        CLI::App *chosen = app.get_subcommands().front();
        nlohmann::json provenance;
        provenance["argv"] = std::vector<std::string>(argv, argv + argc);
        if (chosen == replay) {
            const std::string out_override = s.output;
            Settings recorded = load_manifest(raw.replay_manifest);
            if (!out_override.empty()) {
                recorded.output = out_override;
            }
            provenance["replayed_from"] = raw.replay_manifest;
            return execute(recorded, provenance, raw.manifest);
        }

        s.command = chosen->get_name();
        provenance["config_file"] = raw.config.empty() ? nlohmann::json(nullptr) : nlohmann::json(raw.config);
        if (given(chosen, "--seed")) {
            s.seed = raw.seed;
        }
        if (given(chosen, "--gamma")) {
            s.gamma = parse_gamma_list(raw.gamma);
        }
        if (chosen == gen && given(gen, "--nu1")) {
            s.nu1 = raw.nu1 == "never" ? 0 : std::stoull(raw.nu1);
        }
        if (chosen == gen && !s.durations.empty() && s.nu1 == 0) {
            s.durations.clear();
        }
        if (given(chosen, "--threshold") && given(chosen, "--gamma")) {
            config_error("--gamma and --threshold are mutually exclusive");
        }
        return execute(s, provenance, raw.manifest);
    } catch (const CliError &e) {
        std::cerr << "wdcusum: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::invalid_argument &e) {
        std::cerr << "wdcusum: invalid value: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception &e) {
        std::cerr << "wdcusum: internal error: " << e.what() << "\n";
        return kInternal;
    }
}
