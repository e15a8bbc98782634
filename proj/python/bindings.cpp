#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "regimecons/config.hpp"
#include "regimecons/verification.hpp"

namespace py = pybind11;
using namespace regimecons;

namespace {

Series parse_series(const std::string& s) {
    // "g", "gbar<k>", "ghat<k>"
    if (s == "g") return Series::g();
    if (s.rfind("gbar", 0) == 0 && s.size() > 4) return Series::gbar(std::stoul(s.substr(4)));
    if (s.rfind("ghat", 0) == 0 && s.size() > 4) return Series::ghat(std::stoul(s.substr(4)));
    throw std::invalid_argument("unknown series '" + s + "' (expected g, gbar<k>, ghat<k>)");
}

McSettings mc_settings(std::size_t n_paths, std::uint64_t seed, std::size_t n_substeps, std::size_t n_workers) {
    return {n_paths, seed, n_substeps, n_workers};
}

py::dict theta_dict(const ThetaEstimate& e) {
    py::dict d;
    d["mean"] = e.mean;
    d["std_error"] = e.std_error;
    d["n_paths"] = e.n_paths;
    d["seed"] = e.seed;
    d["rho"] = e.rho;
    return d;
}

}  // namespace

PYBIND11_MODULE(_regimecons, m) {
    m.doc() = "Regime-switching consumption/investment solver";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
    py::register_exception<InadmissibleError>(m, "InadmissibleError", PyExc_RuntimeError);

    py::class_<ModelParams>(m, "ModelParams")
        .def_readwrite("T", &ModelParams::T)
        .def_readwrite("gamma", &ModelParams::gamma)
        .def_readwrite("x0", &ModelParams::x0)
        .def_readwrite("initial_state", &ModelParams::initial_state)
        .def_property_readonly("n_regimes", &ModelParams::n_regimes)
        .def_property_readonly("rho", [](const ModelParams& p) {
            std::vector<double> r;
            for (const auto& c : p.regimes) r.push_back(c.rho);
            return r;
        })
        .def_property_readonly("generator", [](const ModelParams& p) { return p.generator.rows(); });

    py::class_<GTable, std::shared_ptr<GTable>>(m, "GTable")
        .def_property_readonly("grid", &GTable::grid)
        .def_property_readonly("n_regimes", &GTable::n_regimes)
        .def_property_readonly("ghat_rates", &GTable::ghat_rates)
        .def_readonly("richardson_gap", &GTable::richardson_gap)
        .def("values", [](const GTable& t, const std::string& s, std::size_t regime) {
            const auto v = t.values(parse_series(s), regime);
            return std::vector<double>(v.begin(), v.end());
        }, py::arg("series"), py::arg("regime"))
        .def("value", [](const GTable& t, const std::string& s, std::size_t regime, double time) {
            return eval_g(t, time, regime, parse_series(s));
        }, py::arg("series"), py::arg("regime"), py::arg("t"));

    m.def("figure_params", &figure_params, py::arg("figure"), py::arg("gamma") = 0.5, py::arg("horizon") = 1.0);
    m.def("params_from_json", [](const std::string& text) {
        return parse_config(nlohmann::json::parse(text)).model;
    }, py::arg("text"), "Model part of a JSON run configuration (not validated).");
    m.def("validate", &validate, py::arg("params"));

    m.def("utility", [](double x, double gamma) { return CrraUtility(gamma).value(x); }, py::arg("x"),
          py::arg("gamma"));
    m.def("inverse_marginal", [](double y, double gamma) { return CrraUtility(gamma).inverse_marginal(y); },
          py::arg("y"), py::arg("gamma"));
    m.def("merton_closed_form", &merton_closed_form, py::arg("r"), py::arg("mu"), py::arg("sigma"), py::arg("rho"),
          py::arg("gamma"), py::arg("T"), py::arg("t"));
    m.def("investment_fraction", py::overload_cast<const ModelParams&, std::size_t>(&investment_fraction),
          py::arg("params"), py::arg("regime"));

    m.def("solve", [](const ModelParams& p, std::size_t n_steps, bool richardson) {
        return std::make_shared<GTable>(solve_all(p, {n_steps, richardson}));
    }, py::arg("params"), py::arg("n_steps") = 2048, py::arg("richardson_check") = false,
       py::call_guard<py::gil_scoped_release>());

    m.def("consumption_curves", [](const GTable& t, double gamma) {
        const auto c = consumption_curves(t, gamma);
        py::dict d;
        d["t"] = c.times;
        d["cbar"] = c.cbar;
        d["chat"] = c.chat;
        return d;
    }, py::arg("table"), py::arg("gamma"));

    m.def("estimate_theta", [](const ModelParams& p, std::shared_ptr<GTable> table, const std::string& strategy,
                               double t, double x, std::size_t regime, std::size_t n_paths, std::uint64_t seed,
                               std::size_t n_substeps, std::size_t n_workers) {
        const auto policy = Policy::from_name(strategy, p, table);
        ThetaEstimate e;
        {
            py::gil_scoped_release release;
            e = estimate_theta(p, policy, t, x, regime, mc_settings(n_paths, seed, n_substeps, n_workers));
        }
        return theta_dict(e);
    }, py::arg("params"), py::arg("table"), py::arg("strategy") = "spp", py::arg("t") = 0.0, py::arg("x") = 1.0,
       py::arg("regime") = 0, py::arg("n_paths") = 100000, py::arg("seed") = 20240601, py::arg("n_substeps") = 64,
       py::arg("n_workers") = 1);

    m.def("spike_gap", [](const ModelParams& p, std::shared_ptr<GTable> table, double t, double x, std::size_t regime,
                          std::optional<double> c_rate, std::optional<double> pi_fraction,
                          std::optional<double> pi_dollars, const std::vector<double>& epsilons, std::size_t n_paths,
                          std::uint64_t seed, std::size_t n_substeps, std::size_t n_workers) {
        std::vector<SpikeGap> gaps;
        {
            py::gil_scoped_release release;
            gaps = spike_gap(p, table, t, x, regime, {pi_dollars, c_rate, pi_fraction}, epsilons,
                             mc_settings(n_paths, seed, n_substeps, n_workers));
        }
        py::list out;
        for (const auto& g : gaps) {
            py::dict d;
            d["epsilon"] = g.epsilon;
            d["gap"] = g.gap;
            d["std_error"] = g.std_error;
            out.append(d);
        }
        return out;
    }, py::arg("params"), py::arg("table"), py::arg("t") = 0.0, py::arg("x") = 1.0, py::arg("regime") = 0,
       py::arg("c_rate") = py::none(), py::arg("pi_fraction") = py::none(), py::arg("pi_dollars") = py::none(),
       py::arg("epsilons") = std::vector<double>{0.1, 0.05, 0.025}, py::arg("n_paths") = 100000,
       py::arg("seed") = 20240601, py::arg("n_substeps") = 64, py::arg("n_workers") = 1);

    m.def("pde_residual", [](const ModelParams& p, const GTable& t) {
        const auto r = pde_residual(p, t, ProbeGrid::standard(p.T));
        py::dict d;
        d["max_value_residual"] = r.max_value_residual;
        d["max_cross_residual"] = r.max_cross_residual;
        d["max_terminal_error"] = r.max_terminal_error;
        return d;
    }, py::arg("params"), py::arg("table"));

    m.def("verify", [](const ModelParams& p, const std::string& suite, std::size_t n_steps, std::size_t n_paths,
                       std::uint64_t seed) {
        if (suite != "fast" && suite != "full") throw std::invalid_argument("suite must be 'fast' or 'full'");
        VerificationReport rep;
        {
            py::gil_scoped_release release;
            rep = run_verification(p, suite == "full" ? Suite::full : Suite::fast, {n_steps, false},
                                   mc_settings(n_paths, seed, 64, 1));
        }
        return rep.to_json().dump();
    }, py::arg("params"), py::arg("suite") = "fast", py::arg("n_steps") = 2048, py::arg("n_paths") = 20000,
       py::arg("seed") = 20240601, "Verification report as a JSON string.");
}
