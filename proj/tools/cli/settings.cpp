#include "settings.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "errors.hpp"

namespace wdcli {

namespace {

std::string trim(const std::string &s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string &text, char sep) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

double to_double(const std::string &key, const std::string &text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) {
            return v;
        }
    } catch (const std::exception &) {
    }
    config_error("'" + key + "' expects a number, got '" + text + "'");
}

std::uint64_t to_unsigned(const std::string &key, const std::string &text) {
    try {
        std::size_t used = 0;
        if (!text.empty() && text[0] != '-') {
            const unsigned long long v = std::stoull(text, &used);
            if (used == text.size()) {
                return v;
            }
        }
    } catch (const std::exception &) {
    }
    config_error("'" + key + "' expects a non-negative integer, got '" + text + "'");
}

bool to_bool(const std::string &key, const std::string &text) {
    if (text == "true" || text == "1" || text == "yes") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no") {
        return false;
    }
    config_error("'" + key + "' expects true or false, got '" + text + "'");
}

std::uint32_t to_u32(const std::string &key, const std::string &text) {
    const std::uint64_t v = to_unsigned(key, text);
    if (v > 0xffffffffULL) {
        config_error("'" + key + "' is out of range");
    }
    return static_cast<std::uint32_t>(v);
}

} // namespace

double parse_gamma(const std::string &text) {
    const std::string t = trim(text);
    if (t.rfind("e^", 0) == 0) {
        return std::exp(to_double("gamma", t.substr(2)));
    }
    return to_double("gamma", t);
}

std::vector<double> parse_gamma_list(const std::string &text) {
    std::vector<double> out;
    for (const auto &item : split(text, ',')) {
        out.push_back(parse_gamma(item));
    }
    return out;
}

void load_config(const std::string &path, Settings &s) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(path, tree);
    } catch (const pt::ini_parser_error &e) {
        if (e.line() == 0) {
            throw CliError(kIo, "cannot read config " + path + ": " + e.message());
        }
        config_error(path + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    for (const auto &[section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            config_error(path + ": key '" + section + "' outside any section");
        }
        for (const auto &[key, node] : body) {
            const std::string name = section + "." + key;
            const std::string value = trim(node.data());
            if (section == "pair") {
                if (key == "pre_mean") {
                    s.pre_mean = to_double(name, value);
                } else if (key == "pre_variance") {
                    s.pre_variance = to_double(name, value);
                } else if (key == "post_mean") {
                    s.post_mean = to_double(name, value);
                } else if (key == "post_variance") {
                    s.post_variance = to_double(name, value);
                } else {
                    config_error(path + ": unknown key " + name);
                }
            } else if (section == "network") {
                if (key == "L") {
                    s.sensors = to_u32(name, value);
                } else if (key == "m") {
                    s.initial_size = to_u32(name, value);
                } else if (key == "n") {
                    s.final_size = to_u32(name, value);
                } else {
                    config_error(path + ": unknown key " + name);
                }
            } else if (section == "truth") {
                if (key == "m") {
                    s.true_initial_size = to_u32(name, value);
                } else if (key == "n") {
                    s.true_final_size = to_u32(name, value);
                } else {
                    config_error(path + ": unknown key " + name);
                }
            } else if (section == "schedule") {
                if (key == "d") {
                    s.durations.clear();
                    for (const auto &item : split(value, ',')) {
                        s.durations.push_back(to_unsigned(name, item));
                    }
                } else if (key == "nu1") {
                    s.nu1 = value == "never" ? 0 : to_unsigned(name, value);
                } else if (key == "policy") {
                    s.policy = value;
                } else {
                    config_error(path + ": unknown key " + name);
                }
            } else if (section == "grid") {
                if (key == "gamma") {
                    s.gamma = parse_gamma_list(value);
                } else {
                    config_error(path + ": unknown key " + name);
                }
            } else if (section == "run") {
                if (key == "seed") {
                    s.seed = to_unsigned(name, value);
                } else if (key == "mtfa_trials") {
                    s.mtfa_trials = to_unsigned(name, value);
                } else if (key == "wadd_trials") {
                    s.wadd_trials = to_unsigned(name, value);
                } else if (key == "kl_trials") {
                    s.kl_trials = to_unsigned(name, value);
                } else if (key == "mtfa_horizon") {
                    s.mtfa_horizon = to_unsigned(name, value);
                } else if (key == "wadd_horizon") {
                    s.wadd_horizon = to_unsigned(name, value);
                } else if (key == "calibrate") {
                    s.calibrate = to_bool(name, value);
                } else if (key == "tolerance") {
                    s.tolerance = to_double(name, value);
                } else if (key == "censoring_budget") {
                    s.censoring_budget = to_double(name, value);
                } else if (key == "workers") {
                    s.workers = to_u32(name, value);
                } else if (key == "threshold") {
                    s.threshold = to_double(name, value);
                } else {
                    config_error(path + ": unknown key " + name);
                }
            } else {
                config_error(path + ": unknown section [" + section + "]");
            }
        }
    }
}

nlohmann::json to_json(const Settings &s) {
    nlohmann::json j;
    j["command"] = s.command;
    j["pair"] = {{"pre_mean", s.pre_mean},
                 {"pre_variance", s.pre_variance},
                 {"post_mean", s.post_mean},
                 {"post_variance", s.post_variance}};
    j["network"] = {{"L", s.sensors}, {"m", s.initial_size}, {"n", s.final_size}};
    j["truth"] = {{"m", s.true_initial_size}, {"n", s.true_final_size}};
    j["schedule"] = {{"d", s.durations}, {"nu1", s.nu1}, {"steps", s.steps}, {"policy", s.policy}};
    j["gamma"] = s.gamma;
    j["threshold"] = s.threshold ? nlohmann::json(*s.threshold) : nlohmann::json(nullptr);
    j["rho"] = s.rho;
    j["run"] = {{"mtfa_trials", s.mtfa_trials},
                {"wadd_trials", s.wadd_trials},
                {"kl_trials", s.kl_trials},
                {"mtfa_horizon", s.mtfa_horizon},
                {"wadd_horizon", s.wadd_horizon},
                {"calibrate", s.calibrate},
                {"tolerance", s.tolerance},
                {"censoring_budget", s.censoring_budget},
                {"seed", s.seed ? nlohmann::json(*s.seed) : nlohmann::json(nullptr)},
                {"workers", s.workers},
                {"phase", s.phase},
                {"full_trace", s.full_trace}};
    j["input"] = s.input;
    j["output"] = s.output;
    return j;
}

Settings settings_from_json(const nlohmann::json &j) {
    Settings s;
    try {
        s.command = j.at("command").get<std::string>();
        const auto &pair = j.at("pair");
        s.pre_mean = pair.at("pre_mean").get<double>();
        s.pre_variance = pair.at("pre_variance").get<double>();
        s.post_mean = pair.at("post_mean").get<double>();
        s.post_variance = pair.at("post_variance").get<double>();
        const auto &net = j.at("network");
        s.sensors = net.at("L").get<std::uint32_t>();
        s.initial_size = net.at("m").get<std::uint32_t>();
        s.final_size = net.at("n").get<std::uint32_t>();
        s.true_initial_size = j.at("truth").at("m").get<std::uint32_t>();
        s.true_final_size = j.at("truth").at("n").get<std::uint32_t>();
        const auto &sched = j.at("schedule");
        s.durations = sched.at("d").get<std::vector<std::uint64_t>>();
        s.nu1 = sched.at("nu1").get<std::uint64_t>();
        s.steps = sched.at("steps").get<std::uint64_t>();
        s.policy = sched.at("policy").get<std::string>();
        s.gamma = j.at("gamma").get<std::vector<double>>();
        if (!j.at("threshold").is_null()) {
            s.threshold = j.at("threshold").get<double>();
        }
        s.rho = j.at("rho").get<std::vector<double>>();
        const auto &run = j.at("run");
        s.mtfa_trials = run.at("mtfa_trials").get<std::uint64_t>();
        s.wadd_trials = run.at("wadd_trials").get<std::uint64_t>();
        s.kl_trials = run.at("kl_trials").get<std::uint64_t>();
        s.mtfa_horizon = run.at("mtfa_horizon").get<std::uint64_t>();
        s.wadd_horizon = run.at("wadd_horizon").get<std::uint64_t>();
        s.calibrate = run.at("calibrate").get<bool>();
        s.tolerance = run.at("tolerance").get<double>();
        s.censoring_budget = run.at("censoring_budget").get<double>();
        if (!run.at("seed").is_null()) {
            s.seed = run.at("seed").get<std::uint64_t>();
        }
        s.workers = run.at("workers").get<unsigned>();
        s.phase = run.at("phase").get<std::uint32_t>();
        s.full_trace = run.at("full_trace").get<bool>();
        s.input = j.at("input").get<std::string>();
        s.output = j.at("output").get<std::string>();
    } catch (const nlohmann::json::exception &e) {
        config_error(std::string("malformed manifest parameters: ") + e.what());
    }
    return s;
}

} // namespace wdcli
