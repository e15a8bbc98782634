#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "regimecons/model.hpp"
#include "regimecons/ode.hpp"

namespace regimecons {

/// Merton proportion mu_i / (sigma_i^2 (1 - gamma)).
double investment_fraction(const ModelParams& params, std::size_t regime);

enum class PolicyKind { spp, precommitment, naive, spike };

/// Constant override of a base policy on [t0, t1]. A missing component keeps
/// the base policy's action for that component. At most one of `pi_dollars`
/// and `pi_fraction` may be set.
struct SpikeOverride {
    double t0 = 0.0;
    double t1 = 0.0;
    std::optional<double> pi_dollars;   ///< dollar amount held in the stock
    std::optional<double> c_rate;       ///< consumption-to-wealth ratio
    std::optional<double> pi_fraction;  ///< share of current wealth held in the stock
};

struct Action {
    double pi_dollars;
    double c_dollars;
};

/// Feedback rule (t, x, regime) -> (stock position, consumption). Immutable
/// view over a shared GTable.
class Policy {
public:
    static Policy subgame_perfect(const ModelParams& params, std::shared_ptr<const GTable> table);
    /// Pre-commitment rule for the fixed rate ghat_rates()[rate_index]
    /// (index 0 is PRE1, index 1 is PRE2).
    static Policy precommitment(const ModelParams& params, std::shared_ptr<const GTable> table,
                                std::size_t rate_index);
    /// In regime i consume per the pre-commitment problem whose rate is rho_i.
    static Policy naive(const ModelParams& params, std::shared_ptr<const GTable> table);
    static Policy spike(const Policy& base, const SpikeOverride& override);

    /// Parses "spp", "pre1", "pre2", ..., "naive".
    static Policy from_name(const std::string& name, const ModelParams& params,
                            std::shared_ptr<const GTable> table);

    PolicyKind kind() const { return kind_; }
    std::string name() const;
    const GTable& table() const { return *table_; }
    const std::optional<SpikeOverride>& spike_override() const { return spike_; }
    double gamma() const { return gamma_; }

    /// True if both actions are proportional to wealth everywhere.
    bool linear_in_wealth() const { return !spike_ || !spike_->pi_dollars; }
    bool spike_active(double t) const { return spike_ && t >= spike_->t0 && t <= spike_->t1; }

    double investment_fraction(std::size_t regime) const { return fractions_.at(regime); }
    /// Stock share in force at t, including a fractional spike override.
    double investment_fraction(double t, std::size_t regime) const {
        return spike_active(t) && spike_->pi_fraction ? *spike_->pi_fraction : fractions_.at(regime);
    }
    /// Consumption-to-wealth ratio. For a spike policy the override applies on
    /// the closed interval [t0, t1].
    double consumption_rate(double t, std::size_t regime) const;
    /// Ratio of the rule without any spike override.
    double base_consumption_rate(double t, std::size_t regime) const;

    Action action(double t, double x, std::size_t regime) const;

private:
    Policy(PolicyKind kind, std::shared_ptr<const GTable> table, std::vector<double> fractions, double gamma)
        : kind_(kind), table_(std::move(table)), fractions_(std::move(fractions)), gamma_(gamma) {}

    PolicyKind kind_;
    PolicyKind base_kind_ = PolicyKind::spp;
    std::shared_ptr<const GTable> table_;
    std::vector<double> fractions_;
    double gamma_;
    std::size_t rate_index_ = 0;
    std::vector<std::size_t> naive_rate_of_regime_;
    std::optional<SpikeOverride> spike_;
};

/// Consumption-to-wealth ratios of every rule on a set of times:
/// `cbar[i][k]` for the subgame-perfect rule, `chat[rate][i][k]` for each
/// pre-commitment rule.
struct ConsumptionCurve {
    std::vector<double> times;
    std::vector<std::vector<double>> cbar;
    std::vector<std::vector<std::vector<double>>> chat;
};

/// Curves on the table's own grid (exact node values).
ConsumptionCurve consumption_curves(const GTable& table, double gamma);
/// Curves at arbitrary times in [0, T] via interpolation.
ConsumptionCurve consumption_curves(const GTable& table, double gamma, const std::vector<double>& times);

}  // namespace regimecons
