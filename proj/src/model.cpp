#include "regimecons/model.hpp"

#include <cmath>
#include <sstream>

namespace regimecons {

namespace {

std::string join(const std::vector<std::string>& items) {
    std::ostringstream os;
    for (std::size_t k = 0; k < items.size(); ++k) {
        if (k) os << "; ";
        os << items[k];
    }
    return os.str();
}

}  // namespace

GeneratorMatrix::GeneratorMatrix(const std::vector<std::vector<double>>& rows) : n_(rows.size()) {
    entries_.reserve(n_ * n_);
    for (const auto& row : rows) {
        if (row.size() != n_) throw std::invalid_argument("generator matrix must be square");
        entries_.insert(entries_.end(), row.begin(), row.end());
    }
}

GeneratorMatrix GeneratorMatrix::zero(std::size_t n) {
    return GeneratorMatrix(std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));
}

std::vector<std::vector<double>> GeneratorMatrix::rows() const {
    std::vector<std::vector<double>> out(n_, std::vector<double>(n_));
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) out[i][j] = (*this)(i, j);
    return out;
}

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::invalid_argument("invalid model parameters: " + join(violations)),
      violations_(std::move(violations)) {}

std::vector<std::string> validate(const ModelParams& p) {
    std::vector<std::string> out;
    auto bad = [&](const std::string& msg) { out.push_back(msg); };

    if (!std::isfinite(p.T) || p.T <= 0.0) bad("T must be finite and > 0");
    if (!std::isfinite(p.x0) || p.x0 <= 0.0) bad("x0 must be finite and > 0");
    if (!std::isfinite(p.gamma) || p.gamma >= 1.0) bad("gamma must be finite and < 1");

    if (p.regimes.empty()) bad("regimes must not be empty");
    for (std::size_t i = 0; i < p.regimes.size(); ++i) {
        const auto& c = p.regimes[i];
        const std::string tag = "regimes[" + std::to_string(i) + "].";
        if (!std::isfinite(c.r)) bad(tag + "r must be finite");
        if (!std::isfinite(c.alpha)) bad(tag + "alpha must be finite");
        if (!std::isfinite(c.sigma) || c.sigma <= 0.0) bad(tag + "sigma must be finite and > 0");
        if (!std::isfinite(c.rho) || c.rho <= 0.0) bad(tag + "rho must be finite and > 0");
    }

    const auto& L = p.generator;
    if (L.size() != p.regimes.size()) {
        bad("generator dimension " + std::to_string(L.size()) + " does not match " +
            std::to_string(p.regimes.size()) + " regimes");
    }
    for (std::size_t i = 0; i < L.size(); ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < L.size(); ++j) {
            const double v = L(i, j);
            if (!std::isfinite(v)) {
                bad("generator[" + std::to_string(i) + "][" + std::to_string(j) + "] must be finite");
            } else if (i != j && v < 0.0) {
                bad("generator[" + std::to_string(i) + "][" + std::to_string(j) +
                    "] off-diagonal intensity must be >= 0");
            }
            row_sum += v;
        }
        if (std::isfinite(row_sum) && std::abs(row_sum) > 1e-12) {
            std::ostringstream os;
            os << "generator row " << i << " sums to " << row_sum << ", expected 0";
            bad(os.str());
        }
    }

    if (p.initial_state >= p.regimes.size()) bad("initial_state out of range");
    return out;
}

void require_valid(const ModelParams& params) {
    auto violations = validate(params);
    if (!violations.empty()) throw ValidationError(std::move(violations));
}

double CrraUtility::value(double x) const {
    if (!(x > 0.0)) throw std::domain_error("utility requires x > 0");
    if (gamma_ == 0.0) return std::log(x);
    return std::pow(x, gamma_) / gamma_;
}

double CrraUtility::marginal(double x) const {
    if (!(x > 0.0)) throw std::domain_error("marginal utility requires x > 0");
    return std::pow(x, gamma_ - 1.0);
}

double CrraUtility::inverse_marginal(double y) const {
    if (!(y > 0.0)) throw std::domain_error("inverse marginal utility requires y > 0");
    return std::pow(y, 1.0 / (gamma_ - 1.0));
}

double utility_eval(double gamma, double x) { return CrraUtility(gamma).value(x); }

double inverse_marginal(double gamma, double y) { return CrraUtility(gamma).inverse_marginal(y); }

ModelParams figure_params(int figure, double gamma, double horizon) {
    ModelParams p;
    p.T = horizon;
    p.gamma = gamma;
    p.x0 = 1.0;
    p.initial_state = 0;
    p.generator = GeneratorMatrix({{-2.0, 2.0}, {1.5, -1.5}});
    switch (figure) {
        case 1:
            p.regimes = {{0.05, 0.15, 0.2, 0.3}, {0.05, 0.15, 0.2, 0.06}};
            break;
        case 2:
            p.regimes = {{0.01, 0.11, 0.2, 0.07}, {0.09, 0.19, 0.2, 0.06}};
            break;
        default:
            throw std::invalid_argument("unknown figure id " + std::to_string(figure) + " (expected 1 or 2)");
    }
    return p;
}

}  // namespace regimecons
