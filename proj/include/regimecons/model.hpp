#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace regimecons {

/// Market coefficients and discount rate attached to one state of the
/// Markov chain. Constant in time.
struct RegimeCoefficients {
    double r = 0.0;      ///< riskless rate
    double alpha = 0.0;  ///< stock drift
    double sigma = 0.0;  ///< stock volatility
    double rho = 0.0;    ///< discount rate

    /// Excess return alpha - r.
    double mu() const { return alpha - r; }
};

/// Intensity matrix of a finite-state continuous-time Markov chain.
/// Stored row-major; invariants are checked by validate(), not here.
class GeneratorMatrix {
public:
    GeneratorMatrix() = default;
    explicit GeneratorMatrix(const std::vector<std::vector<double>>& rows);

    static GeneratorMatrix zero(std::size_t n);

    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
    /// -lambda_ii, the rate of leaving state i.
    double exit_rate(std::size_t i) const { return -entries_[i * n_ + i]; }
    std::vector<std::vector<double>> rows() const;

private:
    std::size_t n_ = 0;
    std::vector<double> entries_;
};

struct ModelParams {
    double T = 1.0;
    double gamma = 0.5;  ///< CRRA exponent, gamma < 1; 0 means log utility
    double x0 = 1.0;
    std::vector<RegimeCoefficients> regimes;
    GeneratorMatrix generator;
    std::size_t initial_state = 0;

    std::size_t n_regimes() const { return regimes.size(); }
};

class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const { return violations_; }

private:
    std::vector<std::string> violations_;
};

/// Checks every invariant of the parameter set and reports violations.
/// An empty result means the parameters are valid.
std::vector<std::string> validate(const ModelParams& params);

/// Throws ValidationError carrying the violation list if validate() is non-empty.
void require_valid(const ModelParams& params);

/// CRRA utility family U(x) = x^gamma / gamma, with U(x) = ln x for gamma = 0.
class CrraUtility {
public:
    explicit CrraUtility(double gamma) : gamma_(gamma) {}

    double gamma() const { return gamma_; }
    double value(double x) const;
    double marginal(double x) const;
    /// Inverse of the marginal utility, I(y) = y^(1/(gamma-1)).
    double inverse_marginal(double y) const;

private:
    double gamma_;
};

double utility_eval(double gamma, double x);
double inverse_marginal(double gamma, double y);

/// Two-regime market used by the consumption-rate figures (1 or 2), with the
/// generator [[-2, 2], [1.5, -1.5]], unit initial wealth and start in state 0.
ModelParams figure_params(int figure, double gamma, double horizon = 1.0);

}  // namespace regimecons
