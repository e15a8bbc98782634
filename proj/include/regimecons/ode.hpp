#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "regimecons/detail/pchip.hpp"

#include "regimecons/model.hpp"

namespace regimecons {

struct SolverSettings {
    std::size_t n_steps = 2048;     ///< RK4 steps over [0, T]; at least 16
    bool richardson_check = false;  ///< re-solve at half step and record the gap
};

/// Raised when an iterate leaves the positive half-line.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

/// Which coefficient function to read from a GTable.
///
/// `g` is the value coefficient of regime i discounted at its own rate.
/// `gbar` with `index = k` is the coefficient of the value started in regime i
/// but discounted at rho_k (k != i). `ghat` with `index = k` is the
/// pre-commitment coefficient for the fixed discount rate rho_k.
struct Series {
    enum class Kind { g, gbar, ghat };
    Kind kind = Kind::g;
    std::size_t index = 0;

    static Series g() { return {Kind::g, 0}; }
    static Series gbar(std::size_t discount_regime) { return {Kind::gbar, discount_regime}; }
    static Series ghat(std::size_t rate_index) { return {Kind::ghat, rate_index}; }

    std::string name() const;
};

/// Solved coefficient functions on a common time grid.
///
/// Values between grid nodes come from a monotone piecewise-cubic Hermite
/// interpolant (Fritsch-Butland slopes at interior nodes, second-order
/// one-sided slopes at the ends); nodes are reproduced exactly.
class GTable {
public:
    /// `coupled[i * n + k]` holds the curve started in regime i and discounted
    /// at rho_k, so the diagonal is g. `ghat[k][i]` is the pre-commitment
    /// curve for rate `ghat_rates[k]`. Either block may be empty.
    GTable(std::vector<double> grid, std::size_t n_regimes,
           std::vector<std::vector<double>> coupled,
           std::vector<double> ghat_rates,
           std::vector<std::vector<std::vector<double>>> ghat);

    const std::vector<double>& grid() const { return grid_; }
    double horizon() const { return grid_.back(); }
    std::size_t n_regimes() const { return n_; }
    const std::vector<double>& ghat_rates() const { return ghat_rates_; }

    bool has(Series s) const;
    /// Stored node values; throws std::logic_error if the series was not solved.
    std::span<const double> values(Series s, std::size_t regime) const;
    /// Interpolated value at t in [0, T].
    double value(Series s, std::size_t regime, double t) const;
    /// Time derivative of the interpolant.
    double derivative(Series s, std::size_t regime, double t) const;

    /// max |g_h - g_{h/2}| over shared nodes when the solve ran with
    /// richardson_check.
    std::optional<double> richardson_gap;

private:
    struct Curve {
        std::vector<double> y;
        std::optional<boost::math::interpolators::pchip<std::vector<double>>> interp;
    };
    const Curve& curve(Series s, std::size_t regime) const;

    std::vector<double> grid_;
    std::size_t n_;
    std::vector<Curve> coupled_;
    std::vector<double> ghat_rates_;
    std::vector<Curve> ghat_;
};

/// Backward RK4 solve of the coupled subgame-perfect system for g and the
/// cross-discounted coefficients. The result holds no pre-commitment curves.
GTable solve_spp_system(const ModelParams& params, const SolverSettings& settings = {});

/// Pre-commitment coefficient for one fixed discount rate: `values[i][node]`.
struct PrecommitmentCurves {
    double rho_fixed;
    std::vector<double> grid;
    std::vector<std::vector<double>> values;
};
PrecommitmentCurves solve_precommitment(const ModelParams& params, double rho_fixed,
                                        const SolverSettings& settings = {});

/// Subgame-perfect system plus one pre-commitment problem per regime rate
/// (ghat index k uses rho_k).
GTable solve_all(const ModelParams& params, const SolverSettings& settings = {});

/// Closed-form g(t) for one regime with no switching.
double merton_closed_form(double r, double mu, double sigma, double rho, double gamma, double T,
                          double t);

/// A priori bounds on the solved coefficients.
struct GBounds {
    std::vector<double> g_lower;                  ///< per regime
    std::vector<std::vector<double>> gbar_lower;  ///< [i][k]; diagonal equals g_lower
    double upper = 0.0;                           ///< bound on the sum of all coefficients
};
GBounds g_bounds(const ModelParams& params);

double eval_g(const GTable& table, double t, std::size_t regime, Series which);

}  // namespace regimecons
