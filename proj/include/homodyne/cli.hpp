#pragma once

// Command-line front end: configuration parsing and command dispatch.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "homodyne/analytic.hpp"
#include "homodyne/csv.hpp"
#include "homodyne/ensemble.hpp"
#include "homodyne/protocols.hpp"
#include "homodyne/speedup.hpp"
#include "homodyne/validation.hpp"

namespace homodyne::cli {

enum class Command
{
    simulate,
    mean_entropy,
    first_passage,
    fig1,
    fig2,
    fig3,
    validate,
};

inline const std::map<std::string, Command>& command_names()
{
    static const std::map<std::string, Command> names{
        {"simulate", Command::simulate}, {"mean-entropy", Command::mean_entropy},
        {"first-passage", Command::first_passage}, {"fig1", Command::fig1},
        {"fig2", Command::fig2}, {"fig3", Command::fig3}, {"validate", Command::validate}};
    return names;
}

inline std::string to_string(Command c)
{
    for (const auto& [name, cmd] : command_names())
        if (cmd == c)
            return name;
    return "?";
}

/// Raised for any configuration problem; `exit_code` is what main returns.
class ConfigError : public std::runtime_error
{
  public:
    explicit ConfigError(const std::string& what, int exit_code = 2)
        : std::runtime_error(what), exit_code_(exit_code)
    {
    }

    [[nodiscard]] int exit_code() const { return exit_code_; }

  private:
    int exit_code_;
};

struct RunConfig
{
    Command command = Command::validate;
    ModelParams model{};
    std::string protocol = "rapid";
    SimConfig sim{};
    std::optional<unsigned> threads;
    std::optional<std::string> out;
    std::optional<std::vector<double>> l_grid;
    std::vector<double> targets{0.3, 0.1, 0.05};
    std::uint64_t traj_id = 0;
    bool quick = false;

    [[nodiscard]] std::string default_output_name() const
    {
        return to_string(command) + "_" + csv::format_short(model.eta) + "_" +
               std::to_string(sim.seed) + ".csv";
    }
};

/// Keys accepted in a JSON config file; each mirrors a flag.
struct FileValues
{
    std::optional<std::string> command;
    std::optional<double> gamma, eta, dt, horizon;
    std::optional<std::string> protocol, out;
    std::optional<std::uint64_t> n_traj, seed, record_stride, traj_id;
    std::optional<unsigned> threads;
    std::optional<std::vector<double>> l_grid, targets, initial;
    std::optional<bool> quick;
};

inline FileValues read_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: malformed JSON in '" + path + "': " + e.what());
    }
    if (!j.is_object())
        throw ConfigError("config: top level of '" + path + "' must be an object");

    FileValues v;
    for (const auto& [key, val] : j.items()) {
        auto get = [&](auto& dst) {
            using T = typename std::decay_t<decltype(dst)>::value_type;
            try {
                dst = val.template get<T>();
            } catch (const nlohmann::json::exception&) {
                throw ConfigError("config: field '" + key + "' has the wrong type");
            }
        };
        if (key == "command") get(v.command);
        else if (key == "gamma") get(v.gamma);
        else if (key == "eta") get(v.eta);
        else if (key == "dt") get(v.dt);
        else if (key == "horizon") get(v.horizon);
        else if (key == "protocol") get(v.protocol);
        else if (key == "out") get(v.out);
        else if (key == "n_traj") get(v.n_traj);
        else if (key == "seed") get(v.seed);
        else if (key == "record_stride") get(v.record_stride);
        else if (key == "traj_id") get(v.traj_id);
        else if (key == "threads") get(v.threads);
        else if (key == "l_grid") get(v.l_grid);
        else if (key == "targets") get(v.targets);
        else if (key == "initial") get(v.initial);
        else if (key == "quick") get(v.quick);
        else
            throw ConfigError("config: unknown key '" + key + "'");
    }
    return v;
}

inline BlochState bloch_from_list(const std::vector<double>& v)
{
    if (v.size() != 3)
        throw ConfigError("initial must have three components x,y,z");
    return {v[0], v[1], v[2]};
}

/// Parses arguments (without the program name). Flags override config-file
/// values, which override defaults.
inline RunConfig parse_config(const std::vector<std::string>& args)
{
    CLI::App app{"Rapid-purification feedback for homodyne detection of an optical qubit",
                 "homodyne"};
    app.allow_extras(false);

    std::string command_name;
    std::optional<std::string> config_path, protocol, out;
    std::optional<double> gamma, eta, dt, horizon;
    std::optional<std::uint64_t> n_traj, seed, record_stride, traj_id;
    std::optional<unsigned> threads;
    std::vector<double> l_grid, targets, initial;
    bool quick = false;

    app.add_option("command", command_name,
                   "simulate | mean-entropy | first-passage | fig1 | fig2 | fig3 | validate")
        ->required();
    app.add_option("--config", config_path, "JSON file with a flat schema mirroring the flags");
    app.add_option("--gamma", gamma, "decay rate (default 1)");
    app.add_option("--eta", eta, "detection efficiency in [0,1] (default 1)");
    app.add_option("--protocol", protocol, "rapid | fixed:<theta0> | wr (default rapid)");
    app.add_option("--dt", dt, "step size (default 1e-3/gamma)");
    app.add_option("--horizon", horizon, "simulated time (default 8/gamma)");
    app.add_option("--n-traj", n_traj, "number of trajectories (default 5000)");
    app.add_option("--seed", seed, "noise seed (default 0)");
    app.add_option("--record-stride", record_stride, "steps between recorded samples (default 10)");
    app.add_option("--traj-id", traj_id, "trajectory id for simulate (default 0)");
    app.add_option("--threads", threads, "worker threads (default HOMODYNE_THREADS or all cores)");
    app.add_option("--out", out, "output CSV path (default <command>_<eta>_<seed>.csv)");
    app.add_option("--l-grid", l_grid, "comma-separated decreasing L grid for fig1-3")
        ->delimiter(',');
    app.add_option("--targets", targets, "comma-separated target L values for first-passage")
        ->delimiter(',');
    app.add_option("--initial", initial, "initial Bloch vector x,y,z (default 0,0,0)")
        ->delimiter(',');
    app.add_flag("--quick", quick, "validate: closed-form checks only");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        throw ConfigError(app.help(), 0);
    } catch (const CLI::ParseError& e) {
        throw ConfigError(e.what());
    }

    FileValues file;
    if (config_path)
        file = read_config_file(*config_path);

    auto pick = [](const auto& flag, const auto& from_file) {
        return flag ? flag : from_file;
    };

    RunConfig cfg;
    if (file.command && *file.command != command_name)
        throw ConfigError("config: command '" + *file.command + "' conflicts with '" +
                          command_name + "'");
    const auto it = command_names().find(command_name);
    if (it == command_names().end())
        throw ConfigError("unknown command '" + command_name + "'");
    cfg.command = it->second;

    cfg.model.gamma = pick(gamma, file.gamma).value_or(1.0);
    cfg.model.eta = pick(eta, file.eta).value_or(1.0);
    if (!(cfg.model.gamma > 0.0) || !std::isfinite(cfg.model.gamma))
        throw ConfigError("gamma must be > 0");
    if (!(cfg.model.eta >= 0.0 && cfg.model.eta <= 1.0))
        throw ConfigError("eta must be in [0,1]");

    cfg.protocol = pick(protocol, file.protocol).value_or("rapid");
    try {
        (void)parse_protocol(cfg.protocol);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    cfg.sim = SimConfig::for_gamma(cfg.model.gamma);
    if (auto v = pick(dt, file.dt)) cfg.sim.dt = *v;
    if (auto v = pick(horizon, file.horizon)) cfg.sim.horizon = *v;
    if (auto v = pick(n_traj, file.n_traj)) cfg.sim.n_traj = *v;
    if (auto v = pick(seed, file.seed)) cfg.sim.seed = *v;
    if (auto v = pick(record_stride, file.record_stride)) cfg.sim.record_stride = *v;
    if (!initial.empty())
        cfg.sim.initial = bloch_from_list(initial);
    else if (file.initial)
        cfg.sim.initial = bloch_from_list(*file.initial);
    try {
        (void)cfg.sim.validate(cfg.model.gamma);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    cfg.threads = pick(threads, file.threads);
    cfg.out = pick(out, file.out);
    cfg.traj_id = pick(traj_id, file.traj_id).value_or(0);
    cfg.quick = quick || file.quick.value_or(false);

    if (!l_grid.empty())
        cfg.l_grid = l_grid;
    else if (file.l_grid)
        cfg.l_grid = file.l_grid;
    if (cfg.l_grid) {
        try {
            check_l_grid(*cfg.l_grid);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("l_grid: ") + e.what());
        }
    }

    if (!targets.empty())
        cfg.targets = targets;
    else if (file.targets)
        cfg.targets = *file.targets;
    for (double t : cfg.targets)
        if (!(t > 0.0 && t < 0.5))
            throw ConfigError("targets must lie in (0, 1/2)");
    return cfg;
}

namespace detail {

inline bool is_maximally_mixed(const BlochState& s) { return s == BlochState::maximally_mixed(); }

inline void write_trajectory(std::ostream& os, const RunConfig& cfg)
{
    const Protocol protocol = parse_protocol(cfg.protocol);
    const Trajectory tr = simulate_trajectory(cfg.model, protocol, cfg.sim, cfg.traj_id);
    csv::Writer w(os, {"step", "time", "x", "y", "z", "L", "theta", "dr"});
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const BlochState& s = tr.states[i];
        w.row(static_cast<std::uint64_t>(i * cfg.sim.record_stride), tr.times[i], s.x, s.y, s.z,
              linear_entropy(s), tr.thetas[i], tr.record[i]);
    }
}

inline void write_mean_entropy(std::ostream& os, const RunConfig& cfg, unsigned threads)
{
    const Protocol protocol = parse_protocol(cfg.protocol);
    const auto stats = ensemble_mean_entropy(cfg.model, protocol, cfg.sim, threads);
    const bool from_mixed = is_maximally_mixed(cfg.sim.initial);
    csv::Writer w(os, {"time", "mean_L", "stderr_L", "analytic_L"});
    for (std::size_t i = 0; i < stats.time_grid.size(); ++i) {
        const double t = stats.time_grid[i];
        double analytic = std::nan("");
        if (from_mixed && std::holds_alternative<RapidProtocol>(protocol))
            analytic = feedback_linear_entropy(t, cfg.model.gamma, cfg.model.eta);
        else if (from_mixed && std::holds_alternative<FixedPhaseProtocol>(protocol))
            analytic = mean_linear_entropy_nofeedback(t, cfg.model.gamma, cfg.model.eta);
        w.row(t, stats.mean_L[i], stats.stderr_L[i], analytic);
    }
}

inline void write_first_passage(std::ostream& os, std::ostream& log, const RunConfig& cfg,
                                unsigned threads)
{
    const Protocol protocol = parse_protocol(cfg.protocol);
    const auto stats = mean_first_passage(cfg.model, protocol, cfg.targets, cfg.sim, threads);
    const bool from_mixed = is_maximally_mixed(cfg.sim.initial);
    csv::Writer w(os, {"target_L", "mean_T", "stderr_T", "censored", "analytic_T"});
    for (const auto& st : stats) {
        double analytic = std::nan("");
        if (from_mixed && std::holds_alternative<RapidProtocol>(protocol))
            analytic = time_to_feedback_entropy(st.target_L, cfg.model.gamma, cfg.model.eta);
        else if (from_mixed && std::holds_alternative<WrReducedProtocol>(protocol) &&
                 cfg.model.eta == 1.0)
            analytic = wr_mean_time(st.target_L, cfg.model.gamma);
        if (st.censored > 0)
            log << "warning: target L=" << csv::format(st.target_L) << ": " << st.censored
                << " censored samples\n";
        w.row(st.target_L, st.mean_T.value_or(std::nan("")), st.all_censored() ? std::nan("") : st.stderr_T,
              st.censored, analytic);
    }
}

inline void write_curve(std::ostream& os, std::ostream& log, const SpeedupCurve& c)
{
    std::vector<std::string_view> header{"L", "t_numerator", "t_denominator", "s"};
    if (c.stderr_s)
        header.push_back("stderr_s");
    csv::Writer w(os, header);
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (!c.failures[i].empty())
            log << "warning: L=" << csv::format(c.L[i]) << ": " << c.failures[i] << '\n';
        if (c.stderr_s)
            w.row(c.L[i], c.t_numerator[i], c.t_denominator[i], c.s[i], (*c.stderr_s)[i]);
        else
            w.row(c.L[i], c.t_numerator[i], c.t_denominator[i], c.s[i]);
    }
}

} // namespace detail

/// Executes a parsed configuration. Returns the process exit code; diagnostics
/// and the machine-readable failure summary ("FAIL ...") go to `err`.
inline int run(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    namespace fs = std::filesystem;
    const unsigned threads = resolve_threads(cfg.threads);
    if (auto warning = cfg.sim.validate(cfg.model.gamma))
        err << "warning: " << *warning << '\n';

    const fs::path target = cfg.out.value_or(cfg.default_output_name());
    const fs::path tmp = target.string() + ".partial";
    bool ok = true;
    try {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os)
            throw std::runtime_error("cannot write '" + tmp.string() + "'");
        const auto grid = cfg.l_grid.value_or(default_l_grid());
        switch (cfg.command) {
        case Command::simulate:
            detail::write_trajectory(os, cfg);
            break;
        case Command::mean_entropy:
            detail::write_mean_entropy(os, cfg, threads);
            break;
        case Command::first_passage:
            detail::write_first_passage(os, err, cfg, threads);
            break;
        case Command::fig1:
            detail::write_curve(os, err, speedup_fig1(cfg.model, grid));
            break;
        case Command::fig2:
            detail::write_curve(os, err, speedup_fig2(cfg.model, grid, cfg.sim, threads));
            break;
        case Command::fig3:
            detail::write_curve(os, err, speedup_fig3(cfg.model, grid, cfg.sim, threads));
            break;
        case Command::validate: {
            ValidationOptions opt{cfg.quick, cfg.sim.seed, cfg.sim.n_traj, threads};
            const auto results = run_validation(opt);
            csv::Writer w(os, {"check", "passed", "detail"});
            for (const auto& r : results) {
                out << (r.passed ? "PASS " : "FAIL ") << r.name
                    << (r.detail.empty() ? "" : " (" + r.detail + ")") << '\n';
                if (!r.passed) {
                    err << "FAIL " << r.name << ": " << r.detail << '\n';
                    ok = false;
                }
                std::string detail = r.detail;
                std::replace(detail.begin(), detail.end(), ',', ';');
                std::string name = r.name;
                std::replace(name.begin(), name.end(), ',', ';');
                w.row(name, r.passed ? "true" : "false", detail);
            }
            break;
        }
        }
        os.close();
        if (!os)
            throw std::runtime_error("failed writing '" + tmp.string() + "'");
        fs::rename(tmp, target);
    } catch (const std::exception& e) {
        std::error_code ec;
        fs::remove(tmp, ec);
        err << "FAIL " << to_string(cfg.command) << ": " << e.what() << '\n';
        return 1;
    }
    out << "wrote " << target.string() << '\n';
    return ok ? 0 : 1;
}

} // namespace homodyne::cli
