// Command-line front end: solve, figures, simulate, verify.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "regimecons/config.hpp"
#include "regimecons/model.hpp"
#include "regimecons/ode.hpp"
#include "regimecons/simulation.hpp"
#include "regimecons/strategies.hpp"
#include "regimecons/verification.hpp"

namespace fs = std::filesystem;
using namespace regimecons;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

/// Usage-class failure: bad config, invalid parameters, bad flag values.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path output_dir(const std::optional<std::string>& flag, const RunConfig* cfg) {
    fs::path dir = flag ? fs::path(*flag) : (cfg ? fs::path(cfg->output.directory) : fs::path("."));
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw UsageError("output directory not writable: " + dir.string());
    return dir;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

RunConfig load_valid_config(const std::string& path) {
    RunConfig cfg = load_config(path);
    require_valid(cfg.model);
    return cfg;
}

std::shared_ptr<const GTable> load_or_solve(const RunConfig& cfg, const std::optional<std::string>& gtable_path) {
    if (gtable_path) {
        std::ifstream in(*gtable_path);
        if (!in) throw UsageError("cannot open gtable " + *gtable_path);
        std::vector<double> rates;
        for (const auto& c : cfg.model.regimes) rates.push_back(c.rho);
        return std::make_shared<const GTable>(read_gtable_csv(in, rates));
    }
    return std::make_shared<const GTable>(solve_all(cfg.model, cfg.solver));
}

int cmd_solve(const std::string& config_path, const std::optional<std::string>& out) {
    const RunConfig cfg = load_valid_config(config_path);
    const fs::path dir = output_dir(out, &cfg);
    const GTable table = solve_all(cfg.model, cfg.solver);
    {
        auto os = open_out(dir / "gtable.csv");
        write_gtable_csv(table, os);
    }
    {
        auto os = open_out(dir / "consumption.csv");
        write_consumption_csv(consumption_curves(table, cfg.model.gamma), os);
    }
    std::cout << "wrote " << (dir / "gtable.csv").string() << " and " << (dir / "consumption.csv").string() << " ("
              << table.grid().size() << " nodes)\n";
    return 0;
}

int cmd_figures(int figure, double gamma, double horizon, std::size_t n_steps, const std::optional<std::string>& out) {
    ModelParams params;
    try {
        params = figure_params(figure, gamma, horizon);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    require_valid(params);
    const fs::path dir = output_dir(out, nullptr);
    SolverSettings settings;
    settings.n_steps = n_steps;
    const GTable table = solve_all(params, settings);

    constexpr int kPoints = 512;
    std::vector<double> times(kPoints);
    for (int k = 0; k < kPoints; ++k) times[k] = horizon * k / static_cast<double>(kPoints - 1);
    times.back() = horizon;

    const fs::path file = dir / ("figure" + std::to_string(figure) + ".csv");
    auto os = open_out(file);
    const auto& r = params.regimes;
    std::vector<std::string> comments{
        "figure=" + std::to_string(figure) + " gamma=" + format_number(gamma) + " T=" + format_number(horizon) +
            " n_steps=" + std::to_string(n_steps),
        "r=" + format_number(r[0].r) + "," + format_number(r[1].r) + " mu=" + format_number(r[0].mu()) + "," +
            format_number(r[1].mu()) + " sigma=" + format_number(r[0].sigma) + "," + format_number(r[1].sigma) +
            " rho=" + format_number(r[0].rho) + "," + format_number(r[1].rho) + " generator=[[-2,2],[1.5,-1.5]]"};
    write_consumption_csv(consumption_curves(table, gamma, times), os, comments);
    std::cout << "wrote " << file.string() << "\n";
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& strategy, std::optional<std::size_t> paths,
                 std::optional<std::uint64_t> seed, std::size_t workers, std::size_t dump_paths,
                 const std::optional<std::string>& out) {
    RunConfig cfg = load_valid_config(config_path);
    if (paths) cfg.mc.n_paths = *paths;
    if (seed) cfg.mc.seed = *seed;
    cfg.mc.n_workers = workers;
    if (cfg.mc.n_paths == 0) throw UsageError("--paths must be at least 1");
    const fs::path dir = output_dir(out, &cfg);
    const auto table = std::make_shared<const GTable>(solve_all(cfg.model, cfg.solver));
    const auto& m = cfg.model;

    std::vector<std::string> names;
    if (strategy == "all") {
        names.push_back("spp");
        for (std::size_t k = 0; k < table->ghat_rates().size(); ++k) names.push_back("pre" + std::to_string(k + 1));
        names.push_back("naive");
    } else {
        names.push_back(strategy);
    }
    std::vector<Policy> policies;
    for (const auto& name : names) {
        try {
            policies.push_back(Policy::from_name(name, m, table));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }

    const std::size_t i = m.initial_state;
    const double v = m.gamma != 0.0 ? table->value(Series::g(), i, 0.0) * std::pow(m.x0, m.gamma) / m.gamma : NAN;
    const fs::path file = dir / ("simulate_" + strategy + ".csv");
    auto os = open_out(file);
    os << "strategy,t,x,regime,theta,std_error,n_paths,seed,rho,v_spp,z_vs_v_spp,wealth_mean,wealth_sd,wealth_min,"
          "wealth_max\n";
    std::cout << "strategy  theta            se               z_vs_v_spp\n";
    for (const auto& policy : policies) {
        const auto ev = evaluate_policy(m, policy, 0.0, m.x0, i, cfg.mc);
        const double z = (ev.theta.mean - v) / ev.theta.std_error;
        os << policy.name() << ",0," << format_number(m.x0) << ',' << i << ',' << format_number(ev.theta.mean) << ','
           << format_number(ev.theta.std_error) << ',' << ev.theta.n_paths << ',' << ev.theta.seed << ','
           << format_number(ev.theta.rho) << ',' << format_number(v) << ',' << format_number(z) << ','
           << format_number(ev.wealth_mean) << ',' << format_number(ev.wealth_sd) << ','
           << format_number(ev.wealth_min) << ',' << format_number(ev.wealth_max) << '\n';
        std::cout << policy.name() << std::string(10 - std::min<std::size_t>(policy.name().size(), 9), ' ')
                  << format_number(ev.theta.mean) << "  " << format_number(ev.theta.std_error) << "  "
                  << format_number(z) << "\n";
    }

    if (dump_paths > 0) {
        std::vector<WealthPath> dumped;
        for (std::size_t k = 0; k < dump_paths; ++k) {
            Rng rng = path_engine(cfg.mc.seed, k);
            const auto path = sample_regime_path(m.generator, i, 0.0, m.T, rng);
            dumped.push_back(simulate_wealth(m, policies.front(), path, m.x0, cfg.mc.n_substeps, cfg.mc.seed + k));
        }
        auto ps = open_out(dir / ("paths_" + policies.front().name() + ".csv"));
        write_wealth_paths_csv(dumped, ps);
    }
    std::cout << "wrote " << file.string() << "\n";
    return 0;
}

int cmd_verify(const std::string& config_path, const std::string& suite_name, const std::optional<std::string>& gtable,
               std::optional<std::size_t> paths, std::optional<std::uint64_t> seed, std::size_t workers,
               const std::optional<std::string>& out) {
    RunConfig cfg = load_valid_config(config_path);
    if (paths) cfg.mc.n_paths = *paths;
    if (seed) cfg.mc.seed = *seed;
    cfg.mc.n_workers = workers;
    if (cfg.mc.n_paths == 0) throw UsageError("--paths must be at least 1");
    const Suite suite = suite_name == "full" ? Suite::full : Suite::fast;
    const fs::path dir = output_dir(out, &cfg);
    std::shared_ptr<const GTable> table;
    if (gtable) table = load_or_solve(cfg, gtable);

    const auto report = run_verification(cfg.model, suite, cfg.solver, cfg.mc, table);
    {
        auto os = open_out(dir / "report.json");
        os << report.to_json().dump(2) << '\n';
    }
    {
        auto os = open_out(dir / "report.txt");
        os << report.to_text();
    }
    std::cout << report.to_text();
    return report.all_passed() ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Subgame-perfect, pre-commitment and naive consumption/investment under regime switching"};
    app.require_subcommand(1);

    std::string config;
    std::optional<std::string> out, gtable;
    int figure = 1;
    double gamma = 0.5, horizon = 1.0;
    std::size_t n_steps = 2048, workers = 1, dump = 0;
    std::string strategy = "spp", suite = "fast";
    std::optional<std::size_t> paths;
    std::optional<std::uint64_t> seed;

    auto* solve = app.add_subcommand("solve", "solve the coefficient systems and write gtable.csv, consumption.csv");
    solve->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    solve->add_option("--out", out, "output directory");

    auto* figs = app.add_subcommand("figures", "consumption-rate curves for the two-regime figure markets");
    figs->add_option("--figure", figure, "figure id")->required()->check(CLI::IsMember({1, 2}));
    figs->add_option("--gamma", gamma, "CRRA exponent (< 1)")->capture_default_str();
    figs->add_option("--horizon", horizon, "horizon T")->capture_default_str()->check(CLI::PositiveNumber);
    figs->add_option("--steps", n_steps, "RK4 steps")->capture_default_str();
    figs->add_option("--out", out, "output directory");

    auto* sim = app.add_subcommand("simulate", "Monte Carlo value of a strategy");
    sim->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sim->add_option("--strategy", strategy, "spp, pre1, pre2, naive or all")->capture_default_str();
    sim->add_option("--paths", paths, "number of paths (overrides config)");
    sim->add_option("--seed", seed, "master seed (overrides config)");
    sim->add_option("--workers", workers, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--dump-paths", dump, "write the first N wealth paths to paths_<strategy>.csv");
    sim->add_option("--out", out, "output directory");

    auto* ver = app.add_subcommand("verify", "run the verification suite; exit 0 iff every check passes");
    ver->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    ver->add_option("--suite", suite, "fast or full")->capture_default_str()->check(CLI::IsMember({"fast", "full"}));
    ver->add_option("--gtable", gtable, "audit this gtable.csv instead of solving")->check(CLI::ExistingFile);
    ver->add_option("--paths", paths, "number of paths (overrides config)");
    ver->add_option("--seed", seed, "master seed (overrides config)");
    ver->add_option("--workers", workers, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    ver->add_option("--out", out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*solve) return cmd_solve(config, out);
        if (*figs) return cmd_figures(figure, gamma, horizon, n_steps, out);
        if (*sim) return cmd_simulate(config, strategy, paths, seed, workers, dump, out);
        if (*ver) return cmd_verify(config, suite, gtable, paths, seed, workers, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ValidationError& e) {
        std::cerr << "invalid parameters:\n";
        for (const auto& v : e.violations()) std::cerr << "  " << v << "\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFail;
    }
    return kExitFail;
}
