#include "regimecons/strategies.hpp"

#include <cmath>
#include <stdexcept>

namespace regimecons {

namespace {

std::vector<double> merton_fractions(const ModelParams& p) {
    std::vector<double> f(p.n_regimes());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = investment_fraction(p, i);
    return f;
}

double ratio_from_coefficient(double coeff, double gamma) { return std::pow(coeff, 1.0 / (gamma - 1.0)); }

}  // namespace

double investment_fraction(const ModelParams& params, std::size_t regime) {
    const auto& c = params.regimes.at(regime);
    return c.mu() / (c.sigma * c.sigma * (1.0 - params.gamma));
}

Policy Policy::subgame_perfect(const ModelParams& params, std::shared_ptr<const GTable> table) {
    if (!table || !table->has(Series::g())) throw std::logic_error("subgame-perfect policy needs a solved g table");
    return Policy(PolicyKind::spp, std::move(table), merton_fractions(params), params.gamma);
}

Policy Policy::precommitment(const ModelParams& params, std::shared_ptr<const GTable> table,
                             std::size_t rate_index) {
    if (!table || !table->has(Series::ghat(rate_index)))
        throw std::logic_error("pre-commitment policy " + std::to_string(rate_index + 1) +
                               " needs a solved ghat table");
    Policy p(PolicyKind::precommitment, std::move(table), merton_fractions(params), params.gamma);
    p.base_kind_ = PolicyKind::precommitment;
    p.rate_index_ = rate_index;
    return p;
}

Policy Policy::naive(const ModelParams& params, std::shared_ptr<const GTable> table) {
    if (!table) throw std::logic_error("naive policy needs a solved table");
    std::vector<std::size_t> rate_of(params.n_regimes());
    const auto& rates = table->ghat_rates();
    for (std::size_t i = 0; i < rate_of.size(); ++i) {
        std::size_t k = 0;
        while (k < rates.size() && rates[k] != params.regimes[i].rho) ++k;
        if (k == rates.size())
            throw std::logic_error("naive policy: no pre-commitment curve for rho of regime " + std::to_string(i));
        rate_of[i] = k;
    }
    Policy p(PolicyKind::naive, std::move(table), merton_fractions(params), params.gamma);
    p.base_kind_ = PolicyKind::naive;
    p.naive_rate_of_regime_ = std::move(rate_of);
    return p;
}

Policy Policy::spike(const Policy& base, const SpikeOverride& override) {
    if (base.kind_ != PolicyKind::spp) throw std::invalid_argument("spike perturbations apply to the subgame-perfect rule");
    const double T = base.table_->horizon();
    if (!(override.t0 >= 0.0 && override.t1 > override.t0 && override.t1 <= T))
        throw std::invalid_argument("spike interval must satisfy 0 <= t0 < t1 <= T");
    if (override.c_rate && !(*override.c_rate > 0.0 && std::isfinite(*override.c_rate)))
        throw std::invalid_argument("spike consumption rate must be > 0");
    if (override.pi_dollars && !std::isfinite(*override.pi_dollars))
        throw std::invalid_argument("spike stock position must be finite");
    if (override.pi_fraction && !std::isfinite(*override.pi_fraction))
        throw std::invalid_argument("spike stock fraction must be finite");
    if (override.pi_dollars && override.pi_fraction)
        throw std::invalid_argument("spike sets both a dollar and a fractional stock position");
    Policy p = base;
    p.kind_ = PolicyKind::spike;
    p.spike_ = override;
    return p;
}

Policy Policy::from_name(const std::string& name, const ModelParams& params, std::shared_ptr<const GTable> table) {
    if (name == "spp") return subgame_perfect(params, std::move(table));
    if (name == "naive") return naive(params, std::move(table));
    if (name.size() > 3 && name.compare(0, 3, "pre") == 0) {
        std::size_t pos = 0;
        const unsigned long k = std::stoul(name.substr(3), &pos);
        if (pos == name.size() - 3 && k >= 1) return precommitment(params, std::move(table), k - 1);
    }
    throw std::invalid_argument("unknown strategy '" + name + "' (expected spp, pre1, pre2, naive)");
}

std::string Policy::name() const {
    switch (kind_) {
        case PolicyKind::spp: return "spp";
        case PolicyKind::precommitment: return "pre" + std::to_string(rate_index_ + 1);
        case PolicyKind::naive: return "naive";
        case PolicyKind::spike: return "spike";
    }
    return "?";
}

double Policy::base_consumption_rate(double t, std::size_t regime) const {
    switch (base_kind_) {
        case PolicyKind::spp:
        case PolicyKind::spike:
            return ratio_from_coefficient(table_->value(Series::g(), regime, t), gamma_);
        case PolicyKind::precommitment:
            return ratio_from_coefficient(table_->value(Series::ghat(rate_index_), regime, t), gamma_);
        case PolicyKind::naive:
            return ratio_from_coefficient(
                table_->value(Series::ghat(naive_rate_of_regime_.at(regime)), regime, t), gamma_);
    }
    return 0.0;
}

double Policy::consumption_rate(double t, std::size_t regime) const {
    if (spike_active(t) && spike_->c_rate) return *spike_->c_rate;
    return base_consumption_rate(t, regime);
}

Action Policy::action(double t, double x, std::size_t regime) const {
    if (!(x > 0.0)) throw std::domain_error("policy action requires wealth x > 0");
    const bool in_spike = spike_active(t);
    const double pi = (in_spike && spike_->pi_dollars) ? *spike_->pi_dollars : investment_fraction(t, regime) * x;
    return {pi, consumption_rate(t, regime) * x};
}

ConsumptionCurve consumption_curves(const GTable& table, double gamma) {
    ConsumptionCurve out;
    out.times = table.grid();
    const std::size_t n = table.n_regimes();
    out.cbar.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        for (double v : table.values(Series::g(), i)) out.cbar[i].push_back(ratio_from_coefficient(v, gamma));
    out.chat.resize(table.ghat_rates().size(), std::vector<std::vector<double>>(n));
    for (std::size_t k = 0; k < out.chat.size(); ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (double v : table.values(Series::ghat(k), i))
                out.chat[k][i].push_back(ratio_from_coefficient(v, gamma));
    return out;
}

ConsumptionCurve consumption_curves(const GTable& table, double gamma, const std::vector<double>& times) {
    ConsumptionCurve out;
    out.times = times;
    const std::size_t n = table.n_regimes();
    out.cbar.assign(n, {});
    out.chat.assign(table.ghat_rates().size(), std::vector<std::vector<double>>(n));
    for (double t : times) {
        for (std::size_t i = 0; i < n; ++i) {
            out.cbar[i].push_back(ratio_from_coefficient(table.value(Series::g(), i, t), gamma));
            for (std::size_t k = 0; k < out.chat.size(); ++k)
                out.chat[k][i].push_back(ratio_from_coefficient(table.value(Series::ghat(k), i, t), gamma));
        }
    }
    return out;
}

}  // namespace regimecons
