#include "regimecons/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace regimecons {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

CheckResult make_check(std::string name, double measured, double tolerance, std::string relation,
                       Clock::time_point start, std::string detail = {}) {
    CheckResult c;
    c.name = std::move(name);
    c.measured = measured;
    c.tolerance = tolerance;
    c.relation = std::move(relation);
    c.passed = c.relation == "<=" ? measured <= tolerance : measured >= tolerance;
    c.runtime_s = seconds_since(start);
    c.detail = std::move(detail);
    return c;
}

bool equal_rates(const ModelParams& p) {
    return std::all_of(p.regimes.begin(), p.regimes.end(),
                       [&](const RegimeCoefficients& c) { return c.rho == p.regimes.front().rho; });
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(5) << v;
    return os.str();
}

}  // namespace

bool VerificationReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string VerificationReport::to_text() const {
    std::ostringstream os;
    os << std::left << std::setw(40) << "check" << std::setw(7) << "status" << std::setw(16) << "measured"
       << std::setw(4) << "" << std::setw(14) << "tolerance" << std::setw(12) << "runtime_s" << "detail\n";
    for (const auto& c : checks) {
        os << std::left << std::setw(40) << c.name << std::setw(7) << (c.passed ? "PASS" : "FAIL") << std::setw(16)
           << fmt_double(c.measured) << std::setw(4) << c.relation << std::setw(14) << fmt_double(c.tolerance)
           << std::setw(12) << fmt_double(c.runtime_s) << c.detail << "\n";
    }
    os << (all_passed() ? "ALL PASSED" : "FAILURES PRESENT") << "\n";
    return os.str();
}

nlohmann::json VerificationReport::to_json() const {
    nlohmann::json out;
    out["all_passed"] = all_passed();
    out["checks"] = nlohmann::json::array();
    for (const auto& c : checks) {
        out["checks"].push_back({{"name", c.name},
                                 {"passed", c.passed},
                                 {"measured", c.measured},
                                 {"tolerance", c.tolerance},
                                 {"relation", c.relation},
                                 {"runtime_s", c.runtime_s},
                                 {"detail", c.detail}});
    }
    return out;
}

ProbeGrid ProbeGrid::standard(double horizon) {
    ProbeGrid grid;
    for (int k = 0; k < 20; ++k) grid.times.push_back(horizon * k / 19.0);
    grid.times.back() = horizon;
    for (int k = 0; k < 10; ++k) grid.wealths.push_back(0.25 * std::pow(32.0, k / 9.0));
    return grid;
}

ResidualReport pde_residual(const ModelParams& p, const GTable& table, const ProbeGrid& probes) {
    if (p.gamma == 0.0) throw std::invalid_argument("pde_residual needs the power ansatz (gamma != 0)");
    const std::size_t n = p.n_regimes();
    if (table.n_regimes() != n) throw std::invalid_argument("table and parameters disagree on regime count");
    const double gamma = p.gamma;
    const CrraUtility u(gamma);
    const auto& L = p.generator;

    ResidualReport rep;
    double worst = -1.0;
    std::vector<double> G(n * n), dG(n * n);
    for (double t : probes.times) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) {
                G[j * n + k] = table.value(Series::gbar(k), j, t);
                dG[j * n + k] = table.derivative(Series::gbar(k), j, t);
            }
        }
        for (double x : probes.wealths) {
            const double xg = std::pow(x, gamma) / gamma;
            for (std::size_t i = 0; i < n; ++i) {
                const auto& c = p.regimes[i];
                const double mu = c.mu(), sig2 = c.sigma * c.sigma;
                const double g = G[i * n + i];
                // Controls from the value function itself.
                const double vx = g * std::pow(x, gamma - 1.0);
                const double vxx = (gamma - 1.0) * g * std::pow(x, gamma - 2.0);
                const double F1 = -mu * vx / (sig2 * vxx);
                const double F2 = u.inverse_marginal(vx);
                const double drift = c.r * x + mu * F1 - F2;
                const double util = u.value(F2);

                if (t == table.horizon())
                    rep.max_terminal_error = std::max(rep.max_terminal_error, std::abs(g * xg - u.value(x)));

                for (std::size_t k = 0; k < n; ++k) {
                    const double Gik = G[i * n + k];
                    const double V = Gik * xg;
                    const double Vt = dG[i * n + k] * xg;
                    const double Vx = Gik * std::pow(x, gamma - 1.0);
                    const double Vxx = (gamma - 1.0) * Gik * std::pow(x, gamma - 2.0);
                    double res = Vt + drift * Vx + 0.5 * sig2 * F1 * F1 * Vxx + util + L(i, i) * V -
                                 p.regimes[k].rho * V;
                    for (std::size_t j = 0; j < n; ++j)
                        if (j != i) res += L(i, j) * G[j * n + k] * xg;
                    const double normalised = std::abs(res) / (1.0 + std::abs(p.regimes[k].rho * V));
                    double& slot = (k == i) ? rep.max_value_residual : rep.max_cross_residual;
                    slot = std::max(slot, normalised);
                    if (normalised > worst) {
                        worst = normalised;
                        rep.worst_time = t;
                        rep.worst_wealth = x;
                        rep.worst_regime = i;
                    }
                }
            }
        }
    }
    return rep;
}

double coincidence_check(const ModelParams& params, const SolverSettings& settings) {
    if (!equal_rates(params))
        throw std::invalid_argument("coincidence_check requires the same discount rate in every regime");
    const GTable table = solve_all(params, settings);
    const std::size_t n = params.n_regimes();
    double gap = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto g = table.values(Series::g(), i);
        for (std::size_t k = 0; k < n; ++k) {
            const auto gb = table.values(Series::gbar(k), i);
            const auto gh = table.values(Series::ghat(k), i);
            for (std::size_t m = 0; m < g.size(); ++m)
                gap = std::max({gap, std::abs(g[m] - gb[m]), std::abs(g[m] - gh[m])});
        }
    }
    return gap;
}

BoundsReport bounds_check(const ModelParams& params, const GTable& table) {
    BoundsReport rep;
    rep.bounds = g_bounds(params);
    const std::size_t n = params.n_regimes();
    const std::size_t nodes = table.grid().size();
    rep.min_margin_lower = std::numeric_limits<double>::infinity();
    rep.min_margin_upper = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < nodes; ++m) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                const double v = table.values(Series::gbar(k), i)[m];
                sum += v;
                rep.min_margin_lower = std::min(rep.min_margin_lower, v - rep.bounds.gbar_lower[i][k]);
            }
        }
        rep.min_margin_upper = std::min(rep.min_margin_upper, rep.bounds.upper - sum);
    }
    rep.contained = rep.min_margin_lower >= 0.0 && rep.min_margin_upper >= 0.0;
    return rep;
}

std::vector<ProbeResult> mc_cross_check(const ModelParams& params, std::shared_ptr<const GTable> table,
                                        const std::vector<ValueProbe>& probes, const McSettings& mc) {
    if (params.gamma == 0.0) throw std::invalid_argument("mc_cross_check needs the power ansatz (gamma != 0)");
    const Policy spp = Policy::subgame_perfect(params, table);
    std::vector<ProbeResult> out;
    for (const auto& probe : probes) {
        ProbeResult r;
        r.probe = probe;
        r.v = table->value(Series::g(), probe.regime, probe.t) * std::pow(probe.x, params.gamma) / params.gamma;
        r.theta = estimate_theta(params, spp, probe.t, probe.x, probe.regime, mc);
        const double diff = r.theta.mean - r.v;
        if (r.theta.std_error > 0.0)
            r.z = diff / r.theta.std_error;
        else
            r.z = std::abs(diff) <= 1e-12 * (1.0 + std::abs(r.v)) ? 0.0 : std::numeric_limits<double>::infinity();
        out.push_back(r);
    }
    return out;
}

std::vector<NamedSpike> standard_spikes(const ModelParams& params, const GTable& table, double t,
                                        std::size_t regime) {
    const double c = std::pow(table.value(Series::g(), regime, t), 1.0 / (params.gamma - 1.0));
    const double f = investment_fraction(params, regime);
    const std::optional<double> none;
    return {
        {"double_consumption", {none, 2.0 * c, none}},
        {"half_consumption", {none, 0.5 * c, none}},
        {"zero_stock", {none, none, 0.0}},
        {"double_stock", {none, none, 2.0 * f}},
        {"short_stock", {none, none, -f}},
        {"mixed_half_stock_more_consumption", {none, 1.5 * c, 0.5 * f}},
    };
}

VerificationReport run_verification(const ModelParams& params, Suite suite, const SolverSettings& solver,
                                    const McSettings& mc, std::shared_ptr<const GTable> table) {
    require_valid(params);
    VerificationReport rep;
    const std::size_t n = params.n_regimes();

    auto start = Clock::now();
    if (!table) {
        SolverSettings s = solver;
        s.richardson_check = true;
        table = std::make_shared<const GTable>(solve_all(params, s));
        rep.checks.push_back(make_check("richardson_step_halving_gap", *table->richardson_gap, 1e-8, "<=", start,
                                        "n_steps=" + std::to_string(s.n_steps)));
    } else {
        const bool shape_ok = table->n_regimes() == n && table->horizon() == params.T;
        rep.checks.push_back(make_check("table_matches_config", shape_ok ? 1.0 : 0.0, 1.0, ">=", start,
                                        "regimes and horizon of the supplied table"));
        if (!shape_ok) return rep;
    }

    start = Clock::now();
    double terminal = 0.0, min_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const auto v = table->values(Series::gbar(k), i);
            terminal = std::max(terminal, std::abs(v.back() - 1.0));
            min_value = std::min(min_value, *std::min_element(v.begin(), v.end()));
        }
        for (std::size_t k = 0; k < table->ghat_rates().size(); ++k) {
            const auto v = table->values(Series::ghat(k), i);
            terminal = std::max(terminal, std::abs(v.back() - 1.0));
            min_value = std::min(min_value, *std::min_element(v.begin(), v.end()));
        }
    }
    rep.checks.push_back(make_check("terminal_condition", terminal, 0.0, "<=", start, "max |coefficient(T) - 1|"));
    rep.checks.push_back(make_check("positivity", min_value, 0.0, ">=", start, "min coefficient value"));
    rep.checks.back().passed = min_value > 0.0;

    start = Clock::now();
    const auto bounds = bounds_check(params, *table);
    rep.checks.push_back(make_check("bounds_containment", std::min(bounds.min_margin_lower, bounds.min_margin_upper),
                                    0.0, ">=", start, "min margin to the a priori bounds"));

    if (params.gamma != 0.0) {
        start = Clock::now();
        const auto res = pde_residual(params, *table, ProbeGrid::standard(params.T));
        std::ostringstream where;
        where << "worst at t=" << res.worst_time << " x=" << res.worst_wealth << " regime=" << res.worst_regime;
        rep.checks.push_back(make_check("pde_residual",
                                        std::max(res.max_value_residual, res.max_cross_residual), 1e-6, "<=",
                                        start, where.str()));
        rep.checks.push_back(
            make_check("pde_terminal_condition", res.max_terminal_error, 1e-12, "<=", start, "|v(T,x,i) - U(x)|"));
    }

    if (equal_rates(params)) {
        start = Clock::now();
        SolverSettings s = solver;
        s.richardson_check = false;
        rep.checks.push_back(make_check("constant_rate_coincidence", coincidence_check(params, s), 1e-8, "<=",
                                        start, "max |g - ghat|, |g - gbar|"));
    }

    if (params.gamma != 0.0) {
        std::vector<ValueProbe> probes;
        McSettings m = mc;
        if (suite == Suite::fast) {
            m.n_paths = std::min<std::size_t>(mc.n_paths, 20000);
            for (std::size_t i = 0; i < n; ++i) probes.push_back({0.0, params.x0, i});
        } else {
            for (double frac : {0.0, 0.25, 0.5})
                for (std::size_t i = 0; i < n; ++i) probes.push_back({frac * params.T, params.x0, i});
        }
        for (const auto& probe : probes) {
            start = Clock::now();
            const auto r = mc_cross_check(params, table, {probe}, m).front();
            std::ostringstream name;
            name << "mc_value_t" << r.probe.t << "_x" << r.probe.x << "_i" << r.probe.regime;
            std::ostringstream detail;
            detail << "theta=" << r.theta.mean << " se=" << r.theta.std_error << " v=" << r.v
                   << " paths=" << r.theta.n_paths;
            rep.checks.push_back(make_check(name.str(), std::abs(r.z), 3.0, "<=", start, detail.str()));
        }

        if (suite == Suite::full) {
            const std::vector<double> eps{0.1 * params.T, 0.05 * params.T, 0.025 * params.T};
            const std::size_t i = params.initial_state;
            for (const auto& spike : standard_spikes(params, *table, 0.0, i)) {
                start = Clock::now();
                double worst = std::numeric_limits<double>::infinity();
                std::ostringstream detail;
                for (const auto& g : spike_gap(params, table, 0.0, params.x0, i, spike.spec, eps, mc)) {
                    worst = std::min(worst, g.gap + 3.0 * g.std_error);
                    detail << "eps=" << g.epsilon << ":" << g.gap << "+-" << g.std_error << " ";
                }
                rep.checks.push_back(make_check("spike_" + spike.label, worst, 0.0, ">=", start, detail.str()));
            }
        }
    }
    return rep;
}

}  // namespace regimecons
