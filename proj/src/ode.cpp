#include "regimecons/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace regimecons {

namespace {

// Iterates below this are treated as blow-up.
constexpr double kPositivityFloor = 1e-14;

/// gamma r + gamma mu^2 / (2 sigma^2 (1 - gamma)): the wealth-independent part
/// of the generator applied to x^gamma / gamma under the Merton fraction.
double growth_term(const RegimeCoefficients& c, double gamma) {
    const double mu = c.mu();
    return gamma * c.r + gamma * mu * mu / (2.0 * c.sigma * c.sigma * (1.0 - gamma));
}

std::vector<double> uniform_grid(double T, std::size_t n) {
    std::vector<double> grid(n + 1);
    for (std::size_t k = 0; k <= n; ++k) grid[k] = T * static_cast<double>(k) / static_cast<double>(n);
    grid[n] = T;
    return grid;
}

void check_positive(std::span<const double> y, double t) {
    for (double v : y) {
        if (!(v >= kPositivityFloor)) {
            std::ostringstream os;
            os << "coefficient iterate " << v << " left the positive range at t = " << t;
            throw SolverError(os.str(), t);
        }
    }
}

/// Classical RK4 from t = T down to t = 0 on the uniform grid, starting from
/// the all-ones terminal state. Returns curves as out[component][node].
template <class Rhs>
std::vector<std::vector<double>> march_backward(std::size_t dim, double T, std::size_t n, Rhs&& rhs) {
    const auto grid = uniform_grid(T, n);
    std::vector<std::vector<double>> out(dim, std::vector<double>(n + 1));
    std::vector<double> y(dim, 1.0), k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    for (std::size_t c = 0; c < dim; ++c) out[c][n] = 1.0;

    for (std::size_t step = n; step > 0; --step) {
        const double t = grid[step];
        const double h = grid[step - 1] - t;

        rhs(t, std::span<const double>(y), std::span<double>(k1));
        for (std::size_t c = 0; c < dim; ++c) tmp[c] = y[c] + 0.5 * h * k1[c];
        check_positive(tmp, t + 0.5 * h);
        rhs(t + 0.5 * h, std::span<const double>(tmp), std::span<double>(k2));
        for (std::size_t c = 0; c < dim; ++c) tmp[c] = y[c] + 0.5 * h * k2[c];
        check_positive(tmp, t + 0.5 * h);
        rhs(t + 0.5 * h, std::span<const double>(tmp), std::span<double>(k3));
        for (std::size_t c = 0; c < dim; ++c) tmp[c] = y[c] + h * k3[c];
        check_positive(tmp, t + h);
        rhs(t + h, std::span<const double>(tmp), std::span<double>(k4));
        for (std::size_t c = 0; c < dim; ++c) y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        check_positive(y, grid[step - 1]);

        for (std::size_t c = 0; c < dim; ++c) out[c][step - 1] = y[c];
    }
    return out;
}

/// Right-hand side of the coupled system for G[i][k], the coefficient of the
/// value started in regime i and discounted at rho_k:
///
///   G'(i,k) = -(b_i - rho_k + l_ii) G(i,k) + gamma C_i G(i,k) - C_i^gamma
///             - sum_{j != i} l_ij G(j,k),     C_i = G(i,i)^(1/(gamma-1)).
///
/// On the diagonal the two consumption terms combine to -(1-gamma) g^(gamma/(gamma-1)).
/// For gamma = 0 the C^gamma term is 1, the log-utility limit.
class CoupledRhs {
public:
    explicit CoupledRhs(const ModelParams& p) : p_(p), n_(p.n_regimes()), base_(n_), c_(n_), cg_(n_) {
        for (std::size_t i = 0; i < n_; ++i) base_[i] = growth_term(p.regimes[i], p.gamma);
    }

    void operator()(double /*t*/, std::span<const double> G, std::span<double> dG) {
        const double gamma = p_.gamma;
        const double cons_exp = 1.0 / (gamma - 1.0);
        const double util_exp = gamma / (gamma - 1.0);
        for (std::size_t i = 0; i < n_; ++i) {
            const double gi = G[i * n_ + i];
            c_[i] = std::pow(gi, cons_exp);
            cg_[i] = std::pow(gi, util_exp);
        }
        const auto& L = p_.generator;
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t k = 0; k < n_; ++k) {
                const double v = G[i * n_ + k];
                double d = -(base_[i] - p_.regimes[k].rho + L(i, i)) * v;
                if (k == i)
                    d -= (1.0 - gamma) * cg_[i];
                else
                    d += gamma * c_[i] * v - cg_[i];
                for (std::size_t j = 0; j < n_; ++j)
                    if (j != i) d -= L(i, j) * G[j * n_ + k];
                dG[i * n_ + k] = d;
            }
        }
    }

private:
    const ModelParams& p_;
    std::size_t n_;
    std::vector<double> base_, c_, cg_;
};

/// Pre-commitment system for a fixed rate:
///   ghat'(i) = -(b_i - rho + l_ii) ghat(i) - (1-gamma) ghat(i)^(gamma/(gamma-1)) - sum_{j != i} l_ij ghat(j).
class PrecommitmentRhs {
public:
    PrecommitmentRhs(const ModelParams& p, double rho) : p_(p), rho_(rho), n_(p.n_regimes()), base_(n_) {
        for (std::size_t i = 0; i < n_; ++i) base_[i] = growth_term(p.regimes[i], p.gamma);
    }

    void operator()(double /*t*/, std::span<const double> y, std::span<double> dy) const {
        const double gamma = p_.gamma;
        const double util_exp = gamma / (gamma - 1.0);
        const auto& L = p_.generator;
        for (std::size_t i = 0; i < n_; ++i) {
            double d = -(base_[i] - rho_ + L(i, i)) * y[i] - (1.0 - gamma) * std::pow(y[i], util_exp);
            for (std::size_t j = 0; j < n_; ++j)
                if (j != i) d -= L(i, j) * y[j];
            dy[i] = d;
        }
    }

private:
    const ModelParams& p_;
    double rho_;
    std::size_t n_;
    std::vector<double> base_;
};

void check_settings(const SolverSettings& s) {
    if (s.n_steps < 16) throw std::invalid_argument("SolverSettings.n_steps must be >= 16");
}

double max_gap(const std::vector<std::vector<double>>& coarse, const std::vector<std::vector<double>>& fine) {
    double gap = 0.0;
    for (std::size_t c = 0; c < coarse.size(); ++c)
        for (std::size_t k = 0; k < coarse[c].size(); ++k)
            gap = std::max(gap, std::abs(coarse[c][k] - fine[c][2 * k]));
    return gap;
}

std::vector<std::vector<double>> march_coupled(const ModelParams& params, std::size_t n) {
    CoupledRhs rhs(params);
    const std::size_t n_reg = params.n_regimes();
    return march_backward(n_reg * n_reg, params.T, n, rhs);
}

std::vector<std::vector<double>> march_precommitment(const ModelParams& params, double rho, std::size_t n) {
    PrecommitmentRhs rhs(params, rho);
    return march_backward(params.n_regimes(), params.T, n, rhs);
}

/// Slope of the quadratic through three points, evaluated at the end point
/// `at_left ? x0 : x2`, limited so the end interval stays monotone.
double end_slope(double x0, double x1, double x2, double y0, double y1, double y2, bool at_left) {
    const double h1 = x1 - x0, h2 = x2 - x1;
    double s, secant;
    if (at_left) {
        s = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * y0 + (h1 + h2) / (h1 * h2) * y1 - h1 / (h2 * (h1 + h2)) * y2;
        secant = (y1 - y0) / h1;
    } else {
        s = h2 / (h1 * (h1 + h2)) * y0 - (h1 + h2) / (h1 * h2) * y1 + (2.0 * h2 + h1) / (h2 * (h1 + h2)) * y2;
        secant = (y2 - y1) / h2;
    }
    if (secant == 0.0 || (s > 0.0) != (secant > 0.0)) return 0.0;
    if (std::abs(s) > 3.0 * std::abs(secant)) return 3.0 * secant;
    return s;
}

}  // namespace

std::string Series::name() const {
    switch (kind) {
        case Kind::g: return "g";
        case Kind::gbar: return "gbar@" + std::to_string(index);
        case Kind::ghat: return "ghat" + std::to_string(index + 1);
    }
    return "?";
}

GTable::GTable(std::vector<double> grid, std::size_t n_regimes, std::vector<std::vector<double>> coupled,
               std::vector<double> ghat_rates, std::vector<std::vector<std::vector<double>>> ghat)
    : grid_(std::move(grid)), n_(n_regimes), ghat_rates_(std::move(ghat_rates)) {
    if (grid_.size() < 3) throw std::invalid_argument("GTable grid needs at least 3 nodes");
    if (grid_.front() != 0.0) throw std::invalid_argument("GTable grid must start at t = 0");
    for (std::size_t k = 1; k < grid_.size(); ++k)
        if (!(grid_[k] > grid_[k - 1])) throw std::invalid_argument("GTable grid must be strictly increasing");
    if (!coupled.empty() && coupled.size() != n_ * n_)
        throw std::invalid_argument("GTable coupled block must hold n_regimes^2 curves");
    if (ghat.size() != ghat_rates_.size()) throw std::invalid_argument("GTable ghat block / rate count mismatch");

    auto make = [this](std::vector<double> y) {
        Curve c;
        if (y.empty()) return c;
        if (y.size() != grid_.size()) throw std::invalid_argument("GTable curve length does not match grid");
        const std::size_t m = y.size() - 1;
        const double left = end_slope(grid_[0], grid_[1], grid_[2], y[0], y[1], y[2], true);
        const double right =
            end_slope(grid_[m - 2], grid_[m - 1], grid_[m], y[m - 2], y[m - 1], y[m], false);
        c.y = y;
        c.interp.emplace(std::vector<double>(grid_), std::move(y), left, right);
        return c;
    };

    coupled_.reserve(coupled.size());
    for (auto& y : coupled) coupled_.push_back(make(std::move(y)));
    for (auto& per_rate : ghat) {
        if (per_rate.size() != n_) throw std::invalid_argument("GTable ghat block must hold one curve per regime");
        for (auto& y : per_rate) ghat_.push_back(make(std::move(y)));
    }
}

bool GTable::has(Series s) const {
    switch (s.kind) {
        case Series::Kind::g: return !coupled_.empty() && coupled_[0].interp.has_value();
        case Series::Kind::gbar:
            return s.index < n_ && !coupled_.empty() && coupled_[s.index].interp.has_value();
        case Series::Kind::ghat: return s.index < ghat_rates_.size() && ghat_[s.index * n_].interp.has_value();
    }
    return false;
}

const GTable::Curve& GTable::curve(Series s, std::size_t regime) const {
    if (regime >= n_) throw std::out_of_range("regime index out of range");
    if (!has(s)) throw std::logic_error("series " + s.name() + " was not solved in this table");
    const Curve* c = nullptr;
    switch (s.kind) {
        case Series::Kind::g: c = &coupled_[regime * n_ + regime]; break;
        case Series::Kind::gbar: c = &coupled_[regime * n_ + s.index]; break;
        case Series::Kind::ghat: c = &ghat_[s.index * n_ + regime]; break;
    }
    if (!c->interp) throw std::logic_error("series " + s.name() + " was not solved in this table");
    return *c;
}

std::span<const double> GTable::values(Series s, std::size_t regime) const { return curve(s, regime).y; }

double GTable::value(Series s, std::size_t regime, double t) const {
    if (!(t >= 0.0 && t <= horizon())) throw std::domain_error("eval time outside [0, T]");
    return (*curve(s, regime).interp)(t);
}

double GTable::derivative(Series s, std::size_t regime, double t) const {
    if (!(t >= 0.0 && t <= horizon())) throw std::domain_error("eval time outside [0, T]");
    return curve(s, regime).interp->prime(t);
}

double eval_g(const GTable& table, double t, std::size_t regime, Series which) {
    return table.value(which, regime, t);
}

GTable solve_spp_system(const ModelParams& params, const SolverSettings& settings) {
    require_valid(params);
    check_settings(settings);
    auto curves = march_coupled(params, settings.n_steps);
    std::optional<double> gap;
    if (settings.richardson_check) gap = max_gap(curves, march_coupled(params, 2 * settings.n_steps));
    GTable table(uniform_grid(params.T, settings.n_steps), params.n_regimes(), std::move(curves), {}, {});
    table.richardson_gap = gap;
    return table;
}

PrecommitmentCurves solve_precommitment(const ModelParams& params, double rho_fixed,
                                        const SolverSettings& settings) {
    require_valid(params);
    check_settings(settings);
    if (!std::isfinite(rho_fixed) || rho_fixed <= 0.0) throw std::invalid_argument("rho_fixed must be > 0");
    return {rho_fixed, uniform_grid(params.T, settings.n_steps),
            march_precommitment(params, rho_fixed, settings.n_steps)};
}

GTable solve_all(const ModelParams& params, const SolverSettings& settings) {
    require_valid(params);
    check_settings(settings);
    const std::size_t n = params.n_regimes();
    auto curves = march_coupled(params, settings.n_steps);
    std::optional<double> gap;
    if (settings.richardson_check) gap = max_gap(curves, march_coupled(params, 2 * settings.n_steps));

    std::vector<double> rates(n);
    std::vector<std::vector<std::vector<double>>> ghat(n);
    for (std::size_t k = 0; k < n; ++k) {
        rates[k] = params.regimes[k].rho;
        ghat[k] = march_precommitment(params, rates[k], settings.n_steps);
        if (settings.richardson_check)
            gap = std::max(*gap, max_gap(ghat[k], march_precommitment(params, rates[k], 2 * settings.n_steps)));
    }
    GTable table(uniform_grid(params.T, settings.n_steps), n, std::move(curves), std::move(rates), std::move(ghat));
    table.richardson_gap = gap;
    return table;
}

double merton_closed_form(double r, double mu, double sigma, double rho, double gamma, double T, double t) {
    if (!(gamma < 1.0)) throw std::domain_error("merton_closed_form requires gamma < 1");
    if (!(sigma > 0.0)) throw std::domain_error("merton_closed_form requires sigma > 0");
    const double a =
        (gamma * r + gamma * mu * mu / (2.0 * sigma * sigma * (1.0 - gamma)) - rho) / (1.0 - gamma);
    const double tau = T - t;
    double phi;
    if (std::abs(a) < 1e-12) {
        phi = 1.0 + tau;
    } else {
        const double e = std::exp(a * tau);
        phi = e + std::expm1(a * tau) / a;
    }
    return std::pow(phi, 1.0 - gamma);
}

GBounds g_bounds(const ModelParams& p) {
    const std::size_t n = p.n_regimes();
    const double gamma = p.gamma;
    const auto& L = p.generator;
    GBounds out;
    out.g_lower.resize(n);
    out.gbar_lower.assign(n, std::vector<double>(n));

    // g' <= alpha_i g, integrated from t to T with g(T) = 1.
    double m_g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double alpha = -(growth_term(p.regimes[i], gamma) - p.regimes[i].rho + L(i, i));
        out.g_lower[i] = std::exp(-std::max(alpha, 0.0) * p.T);
        m_g = std::min(m_g, out.g_lower[i]);
    }

    // Consumption ratio ceiling from g >= m_g.
    const double c_max = std::pow(m_g, 1.0 / (gamma - 1.0));

    double a_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const double a = -(growth_term(p.regimes[i], gamma) - p.regimes[k].rho + L(i, i));
            a_min = std::min(a_min, a);
            if (k == i) {
                out.gbar_lower[i][k] = out.g_lower[i];
            } else {
                const double growth = a + std::max(gamma, 0.0) * c_max;
                out.gbar_lower[i][k] = std::exp(-std::max(growth, 0.0) * p.T);
            }
        }
    }

    // Largest total outflow into any column of the coupling.
    double coupling = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (i != j) col += L(i, j);
        coupling = std::max(coupling, col);
    }

    // S = sum of all n^2 coefficients satisfies S' >= beta S with S(T) = n^2.
    const double nn = static_cast<double>(n);
    const double beta = a_min + std::min(gamma, 0.0) * c_max - nn * c_max - coupling;
    out.upper = nn * nn * std::exp(std::max(-beta, 0.0) * p.T);
    return out;
}

}  // namespace regimecons
