#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "api.hpp"
#include "format.hpp"

namespace wdcli {

namespace {

const char *kCurveHeader = "gamma_target,b,calibrated,mtfa_mean,mtfa_stderr,wadd_mean,wadd_stderr,theory_wadd,"
                           "trials,censored,horizon,seed,L,m,n,d,policy\n";

std::uint64_t require_seed(const Settings &s) {
    if (!s.seed) {
        config_error(s.command + " needs a seed (--seed or [run] seed)");
    }
    return *s.seed;
}

wdc_network detector_network(const Settings &s) {
    if (s.sensors == 0 || s.initial_size == 0 || s.final_size == 0) {
        config_error(s.command + " needs the network sizes --L, --m and --n");
    }
    return wdc_network{s.sensors, s.initial_size, s.final_size};
}

wdc_network true_network(const Settings &s) {
    wdc_network net = detector_network(s);
    if (s.true_initial_size != 0) {
        net.initial_size = s.true_initial_size;
    }
    if (s.true_final_size != 0) {
        net.final_size = s.true_final_size;
    }
    return net;
}

std::size_t phase_count(const wdc_network &net) { return net.final_size - net.initial_size + 1; }

PairPtr make_pair(const Settings &s) {
    wdc_pair *pair = nullptr;
    check(wdc_pair_create_gaussian(s.pre_mean, s.pre_variance, s.post_mean, s.post_variance, &pair));
    return PairPtr(pair);
}

wdc_policy_kind policy_kind(const std::string &name) {
    if (name == "prefix") {
        return WDC_POLICY_PREFIX;
    }
    if (name == "rotating") {
        return WDC_POLICY_ROTATING;
    }
    if (name == "uniform") {
        return WDC_POLICY_UNIFORM;
    }
    config_error("unknown policy '" + name + "' (expected prefix, rotating or uniform)");
}

std::vector<double> inverse_rho(double b, std::size_t count) {
    if (count > 0 && !(b > 1.0)) {
        config_error("rho = 1/b needs b > 1; pass --rho explicitly");
    }
    return std::vector<double>(count, count > 0 ? 1.0 / b : 0.0);
}

std::uint64_t default_horizon(double scale, double value) {
    return static_cast<std::uint64_t>(std::ceil(scale * value));
}

bool over_budget(const wdc_mc_estimate &e, double budget) {
    return static_cast<double>(e.censored) > budget * static_cast<double>(e.trials);
}

// Shared tail of the curve-schema rows.
void add_descriptor(Row &row, const Settings &s, const std::string &policy) {
    row.add(std::uint64_t{s.sensors})
        .add(std::uint64_t{s.initial_size})
        .add(std::uint64_t{s.final_size})
        .add(join(s.durations, ';'))
        .add(policy);
}

std::vector<double> kl_ladder(const wdc_pair *pair, const wdc_network &net, const Settings &s, std::uint64_t seed) {
    std::vector<double> kl;
    for (std::size_t p = 1; p <= phase_count(net); ++p) {
        wdc_kl_estimate est;
        check(wdc_estimate_kl(pair, &net, p, s.kl_trials, wdc_derive_seed(seed, p), s.workers, &est));
        kl.push_back(est.estimate);
    }
    return kl;
}

double theory(const std::vector<double> &kl, const std::vector<std::uint64_t> &d, double gamma) {
    std::vector<double> c(d.size());
    std::size_t h = 0;
    check(wdc_scaling_constants(d.data(), d.size(), gamma, kl.data(), kl.size(), c.data(), &h));
    double out = 0.0;
    check(wdc_theory_delay(gamma, kl.data(), kl.size(), c.data(), c.size(), h, &out));
    return out;
}

// A threshold/rho pair for the mtfa and wadd subcommands, one per grid point
// or a single explicit threshold.
struct Point {
    std::optional<double> gamma;
    double threshold;
    std::vector<double> rho;
};

std::vector<Point> points(const Settings &s, const wdc_network &net) {
    const std::size_t transients = phase_count(net) - 1;
    std::vector<Point> out;
    if (s.threshold) {
        out.push_back({std::nullopt, *s.threshold, s.rho.empty() ? inverse_rho(*s.threshold, transients) : s.rho});
        return out;
    }
    if (s.gamma.empty()) {
        config_error(s.command + " needs --gamma or --threshold");
    }
    for (const double gamma : s.gamma) {
        Point p{gamma, 0.0, std::vector<double>(transients)};
        check(wdc_default_params(gamma, &net, &p.threshold, p.rho.data(), p.rho.size()));
        if (!s.rho.empty()) {
            p.rho = s.rho;
        }
        out.push_back(std::move(p));
    }
    return out;
}

void require_durations(const Settings &s, const wdc_network &net) {
    const std::size_t want = phase_count(net) - 1;
    if (s.durations.size() != want) {
        config_error("--d needs n - m = " + std::to_string(want) + " durations, got " +
                     std::to_string(s.durations.size()));
    }
}

Result gen(const Settings &s) {
    const std::uint64_t seed = require_seed(s);
    const wdc_network net = detector_network(s);
    if (s.steps < 1) {
        config_error("gen needs --steps >= 1");
    }
    if (s.nu1 != 0) {
        require_durations(s, net);
    }
    const auto pair = make_pair(s);
    const wdc_schedule schedule{s.nu1, s.durations.data(), s.nu1 == 0 ? 0 : s.durations.size()};
    wdc_stream *raw = nullptr;
    check(wdc_stream_create(pair.get(), &net, &schedule, policy_kind(s.policy), nullptr, seed, &raw));
    const StreamPtr stream(raw);

    Result r;
    r.csv = "k";
    for (std::uint32_t l = 1; l <= net.sensors; ++l) {
        r.csv += ",x_" + std::to_string(l);
    }
    r.csv += ",phase,affected_set\n";
    for (std::uint64_t k = 0; k < s.steps; ++k) {
        wdc_observation obs;
        check(wdc_stream_next(stream.get(), &obs));
        Row row;
        row.add(obs.time);
        for (std::size_t l = 0; l < obs.sensor_count; ++l) {
            row.add(obs.values[l]);
        }
        row.add(std::uint64_t{obs.phase});
        std::vector<std::uint64_t> affected(obs.affected, obs.affected + obs.affected_count);
        for (auto &a : affected) {
            ++a;
        }
        row.add(join(affected, ';'));
        r.csv += row.str();
    }
    return r;
}

std::vector<std::string> split_csv(const std::string &line) {
    std::vector<std::string> out;
    std::stringstream in(line);
    std::string field;
    while (std::getline(in, field, ',')) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

Result detect(const Settings &s, std::istream &stdin_stream) {
    const wdc_network net = detector_network(s);
    const std::size_t phases = phase_count(net);
    double threshold = 0.0;
    std::vector<double> rho;
    if (s.threshold) {
        threshold = *s.threshold;
        rho = s.rho.empty() ? inverse_rho(threshold, phases - 1) : s.rho;
    } else if (s.gamma.size() == 1) {
        rho.resize(phases - 1);
        check(wdc_default_params(s.gamma[0], &net, &threshold, rho.data(), rho.size()));
        if (!s.rho.empty()) {
            rho = s.rho;
        }
    } else {
        config_error("detect needs one --gamma or a --threshold");
    }
    const auto pair = make_pair(s);
    const wdc_params params{threshold, rho.data(), rho.size()};
    wdc_detector *raw = nullptr;
    check(wdc_detector_create(pair.get(), &net, &params, &raw));
    const DetectorPtr detector(raw);

    std::ifstream file;
    std::istream *in = &stdin_stream;
    if (!s.input.empty() && s.input != "-") {
        file.open(s.input);
        if (!file) {
            throw CliError(kIo, "cannot open input " + s.input);
        }
        in = &file;
    }

    std::string line;
    if (!std::getline(*in, line)) {
        config_error("detect: empty input stream");
    }
    const auto header = split_csv(line);
    std::vector<std::size_t> columns;
    for (std::uint32_t l = 1; l <= net.sensors; ++l) {
        const std::string name = "x_" + std::to_string(l);
        std::size_t found = header.size();
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (header[c] == name) {
                found = c;
            }
        }
        if (found == header.size()) {
            config_error("detect: input header lacks column " + name);
        }
        columns.push_back(found);
    }

    Result r;
    r.csv = "k,W";
    for (std::size_t i = 1; i <= phases; ++i) {
        r.csv += ",omega_" + std::to_string(i);
    }
    r.csv += ",alarm\n";
    std::vector<double> x(net.sensors), omega(phases);
    bool alarmed = false;
    std::uint64_t line_no = 1;
    while (std::getline(*in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv(line);
        for (std::size_t l = 0; l < columns.size(); ++l) {
            if (columns[l] >= fields.size()) {
                config_error("detect: line " + std::to_string(line_no) + " is short");
            }
            try {
                std::size_t used = 0;
                x[l] = std::stod(fields[columns[l]], &used);
                if (used != fields[columns[l]].size()) {
                    throw std::invalid_argument("trailing characters");
                }
            } catch (const std::exception &) {
                config_error("detect: line " + std::to_string(line_no) + ": bad value '" + fields[columns[l]] + "'");
            }
        }
        int alarm = 0;
        check(wdc_detector_step(detector.get(), x.data(), x.size(), &alarm));
        double w = 0.0;
        std::uint64_t k = 0;
        std::size_t count = 0;
        check(wdc_detector_statistic(detector.get(), &w));
        check(wdc_detector_time(detector.get(), &k));
        check(wdc_detector_omega(detector.get(), omega.data(), omega.size(), &count));
        Row row;
        row.add(k).add(w);
        for (const double o : omega) {
            row.add(o);
        }
        row.add(std::uint64_t(alarm ? 1 : 0));
        r.csv += row.str();
        if (alarm && !alarmed) {
            alarmed = true;
            r.note = "alarm at k=" + std::to_string(k);
            if (!s.full_trace) {
                break;
            }
        }
    }
    if (!alarmed) {
        r.exit_code = kNoAlarm;
        r.note = "no alarm before the end of the stream";
    }
    return r;
}

Result kl(const Settings &s) {
    const std::uint64_t seed = require_seed(s);
    const wdc_network net = detector_network(s);
    const auto pair = make_pair(s);
    std::vector<std::size_t> phases;
    if (s.phase != 0) {
        phases.push_back(s.phase);
    } else {
        for (std::size_t p = 1; p <= phase_count(net); ++p) {
            phases.push_back(p);
        }
    }
    Result r;
    r.csv = "phase,size,estimate_nats,stderr,trials,seed\n";
    for (const std::size_t p : phases) {
        wdc_kl_estimate est;
        check(wdc_estimate_kl(pair.get(), &net, p, s.kl_trials, wdc_derive_seed(seed, p), s.workers, &est));
        r.csv += Row()
                     .add(std::uint64_t{est.phase})
                     .add(std::uint64_t{est.size})
                     .add(est.estimate)
                     .add(est.std_error)
                     .add(est.trials)
                     .add(seed)
                     .str();
    }
    return r;
}

void flag_censoring(Result &r, const std::string &what, const wdc_mc_estimate &e, double budget) {
    if (over_budget(e, budget)) {
        r.exit_code = kCensoring;
        r.note = what + ": " + std::to_string(e.censored) + " of " + std::to_string(e.trials) +
                 " trials censored at horizon " + std::to_string(e.horizon);
    }
}

Result mtfa(const Settings &s) {
    const std::uint64_t seed = require_seed(s);
    const wdc_network net = detector_network(s);
    const auto pair = make_pair(s);
    Result r;
    r.csv = kCurveHeader;
    for (const Point &p : points(s, net)) {
        wdc_mc_options opts{s.mtfa_trials, s.mtfa_horizon, wdc_mtfa_seed(seed), s.workers};
        if (opts.horizon == 0) {
            opts.horizon = default_horizon(2000.0, p.gamma ? *p.gamma : std::exp(p.threshold));
        }
        const wdc_params params{p.threshold, p.rho.data(), p.rho.size()};
        wdc_mc_estimate est;
        check(wdc_estimate_mtfa(pair.get(), &net, &params, &opts, &est));
        Row row;
        p.gamma ? row.add(*p.gamma) : row.empty();
        row.add(p.threshold).add(std::uint64_t{0}).add(est.mean).add(est.std_error).empty().empty().empty();
        row.add(est.trials).add(est.censored).add(est.horizon).add(seed);
        add_descriptor(row, s, "");
        r.csv += row.str();
        flag_censoring(r, "MTFA run", est, s.censoring_budget);
    }
    return r;
}

Result wadd(const Settings &s) {
    const std::uint64_t seed = require_seed(s);
    const wdc_network net = detector_network(s);
    const wdc_network truth = true_network(s);
    require_durations(s, truth);
    const auto pair = make_pair(s);
    const wdc_schedule schedule{1, s.durations.data(), s.durations.size()};
    const wdc_policy_kind policy = policy_kind(s.policy);
    std::vector<double> kl;
    if (!s.gamma.empty() && !s.threshold) {
        kl = kl_ladder(pair.get(), truth, s, wdc_kl_seed(seed));
    }
    Result r;
    r.csv = kCurveHeader;
    for (const Point &p : points(s, net)) {
        std::optional<double> delay;
        if (p.gamma) {
            delay = theory(kl, s.durations, *p.gamma);
        }
        wdc_mc_options opts{s.wadd_trials, s.wadd_horizon, wdc_wadd_seed(seed), s.workers};
        if (opts.horizon == 0) {
            if (!delay) {
                config_error("wadd with an explicit threshold needs --horizon");
            }
            opts.horizon = default_horizon(100.0, *delay);
        }
        const wdc_params params{p.threshold, p.rho.data(), p.rho.size()};
        wdc_mc_estimate est;
        check(wdc_estimate_wadd(pair.get(), &net, &params, &truth, &schedule, policy, nullptr, &opts, &est));
        Row row;
        p.gamma ? row.add(*p.gamma) : row.empty();
        row.add(p.threshold).add(std::uint64_t{0}).empty().empty().add(est.mean).add(est.std_error);
        delay ? row.add(*delay) : row.empty();
        row.add(est.trials).add(est.censored).add(est.horizon).add(seed);
        add_descriptor(row, s, s.policy);
        r.csv += row.str();
        flag_censoring(r, "WADD run", est, s.censoring_budget);
    }
    return r;
}

Result calibrate(const Settings &s) {
    const std::uint64_t seed = require_seed(s);
    const wdc_network net = detector_network(s);
    const auto pair = make_pair(s);
    if (s.gamma.empty()) {
        config_error("calibrate needs --gamma (one or more MTFA targets)");
    }
    Result r;
    r.csv = kCurveHeader;
    for (const double gamma : s.gamma) {
        const wdc_mc_options opts{s.mtfa_trials, s.mtfa_horizon, wdc_mtfa_seed(seed), s.workers};
        double b = 0.0;
        wdc_mc_estimate est;
        check(wdc_calibrate_threshold(pair.get(), &net, gamma, &opts, s.tolerance, &b, &est));
        Row row;
        row.add(gamma).add(b).add(std::uint64_t{1}).add(est.mean).add(est.std_error).empty().empty().empty();
        row.add(est.trials).add(est.censored).add(est.horizon).add(seed);
        add_descriptor(row, s, "");
        r.csv += row.str();
        flag_censoring(r, "MTFA run", est, s.censoring_budget);
    }
    return r;
}

Result curve(const Settings &s) {
    const std::uint64_t seed = require_seed(s);
    const wdc_network net = detector_network(s);
    const wdc_network truth = true_network(s);
    require_durations(s, truth);
    const auto pair = make_pair(s);
    if (s.gamma.empty()) {
        config_error("curve needs a gamma grid (--gamma or [grid] gamma)");
    }
    wdc_curve_request req{};
    req.gamma_grid = s.gamma.data();
    req.gamma_count = s.gamma.size();
    req.detector = &net;
    req.truth = &truth;
    req.durations = s.durations.data();
    req.duration_count = s.durations.size();
    req.policy = policy_kind(s.policy);
    req.mtfa_trials = s.mtfa_trials;
    req.wadd_trials = s.wadd_trials;
    req.mtfa_horizon = s.mtfa_horizon;
    req.wadd_horizon = s.wadd_horizon;
    req.kl_trials = s.kl_trials;
    req.calibrate = s.calibrate ? 1 : 0;
    req.tolerance = s.tolerance;
    req.censoring_budget = s.censoring_budget;
    req.seed = seed;
    req.workers = s.workers;
    wdc_curve *raw = nullptr;
    check(wdc_curve_run(pair.get(), &req, &raw));
    const CurvePtr rows(raw);

    Result r;
    r.csv = kCurveHeader;
    for (std::size_t i = 0; i < wdc_curve_size(rows.get()); ++i) {
        wdc_curve_row c;
        check(wdc_curve_row_at(rows.get(), i, &c));
        Row row;
        row.add(c.gamma_target).add(c.threshold).add(std::uint64_t(c.calibrated ? 1 : 0));
        row.add(c.mtfa.mean).add(c.mtfa.std_error).add(c.wadd.mean).add(c.wadd.std_error).add(c.theory_wadd);
        row.add(fmt(c.mtfa.trials) + ";" + fmt(c.wadd.trials));
        row.add(fmt(c.mtfa.censored) + ";" + fmt(c.wadd.censored));
        row.add(fmt(c.mtfa.horizon) + ";" + fmt(c.wadd.horizon));
        row.add(seed);
        add_descriptor(row, s, s.policy);
        r.csv += row.str();
    }
    return r;
}

} // namespace

Result run_command(const Settings &s, std::istream &in) {
    if (s.command == "gen") {
        return gen(s);
    }
    if (s.command == "detect") {
        return detect(s, in);
    }
    if (s.command == "kl") {
        return kl(s);
    }
    if (s.command == "mtfa") {
        return mtfa(s);
    }
    if (s.command == "wadd") {
        return wadd(s);
    }
    if (s.command == "calibrate") {
        return calibrate(s);
    }
    if (s.command == "curve") {
        return curve(s);
    }
    config_error("unknown subcommand '" + s.command + "'");
}

} // namespace wdcli
