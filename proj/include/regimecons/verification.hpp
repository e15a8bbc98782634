#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "regimecons/model.hpp"
#include "regimecons/ode.hpp"
#include "regimecons/simulation.hpp"

namespace regimecons {

/// One named check with its measured quantity and the threshold it was held to.
struct CheckResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string relation;  ///< "<=" or ">=": how measured compares to tolerance
    double runtime_s = 0.0;
    std::string detail;
};

struct VerificationReport {
    std::vector<CheckResult> checks;

    bool all_passed() const;
    std::string to_text() const;
    nlohmann::json to_json() const;
};

/// Times x wealths at which the PDE system is evaluated.
struct ProbeGrid {
    std::vector<double> times;
    std::vector<double> wealths;

    /// The fixed 20 x 10 grid: 20 uniform times on [0, T], 10 log-spaced
    /// wealths from 0.25 to 8.
    static ProbeGrid standard(double horizon);
};

struct ResidualReport {
    double max_value_residual = 0.0;   ///< equation for v (own discount rate)
    double max_cross_residual = 0.0;   ///< equations for the cross-discounted values
    double max_terminal_error = 0.0;   ///< |v(T,x,i) - U(x)|
    double worst_time = 0.0;
    double worst_wealth = 0.0;
    std::size_t worst_regime = 0;
};

/// Substitutes v = g x^gamma/gamma and the cross-discounted values into the
/// PDE system with the feedback controls derived from v, and reports the
/// largest residual normalised by (1 + |rho v|). Requires gamma != 0.
ResidualReport pde_residual(const ModelParams& params, const GTable& table, const ProbeGrid& probes);

/// Largest |g - ghat| and |g - gbar| over the grid when every regime shares
/// the same discount rate. Throws std::invalid_argument otherwise.
double coincidence_check(const ModelParams& params, const SolverSettings& settings = {});

struct BoundsReport {
    bool contained = true;
    double min_margin_lower = 0.0;  ///< min over nodes of value - lower bound
    double min_margin_upper = 0.0;  ///< min over nodes of upper bound - sum of values
    GBounds bounds;
};
BoundsReport bounds_check(const ModelParams& params, const GTable& table);

struct ValueProbe {
    double t;
    double x;
    std::size_t regime;
};

struct ProbeResult {
    ValueProbe probe;
    double v = 0.0;
    ThetaEstimate theta;
    double z = 0.0;
};

/// Monte Carlo value of the subgame-perfect rule against g x^gamma/gamma.
std::vector<ProbeResult> mc_cross_check(const ModelParams& params, std::shared_ptr<const GTable> table,
                                        const std::vector<ValueProbe>& probes, const McSettings& mc);

struct NamedSpike {
    std::string label;
    SpikeSpec spec;
};

/// The fixed set of six constant deviations started at (t, regime): scaled
/// consumption ratios, scaled, zero or short stock shares, and a mixed one.
/// Stock components are shares of current wealth, so wealth stays positive.
std::vector<NamedSpike> standard_spikes(const ModelParams& params, const GTable& table, double t,
                                        std::size_t regime);

enum class Suite { fast, full };

/// Runs the audit on one configuration. `table` may be supplied (for example
/// loaded from disk); otherwise the system is solved from `params`.
VerificationReport run_verification(const ModelParams& params, Suite suite, const SolverSettings& solver,
                                    const McSettings& mc, std::shared_ptr<const GTable> table = nullptr);

}  // namespace regimecons
