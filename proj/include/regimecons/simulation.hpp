#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "regimecons/model.hpp"
#include "regimecons/strategies.hpp"

namespace regimecons {

using Rng = std::mt19937_64;

/// Engine for path `index` of a run with master seed `seed`. Streams depend
/// only on (seed, index), so estimates do not depend on how paths are split
/// across workers.
Rng path_engine(std::uint64_t seed, std::uint64_t index);

/// Piecewise-constant trajectory of the Markov chain on [start, end].
struct RegimePath {
    double start = 0.0;
    double end = 0.0;
    std::vector<double> jump_times;   ///< strictly increasing, inside (start, end)
    std::vector<std::size_t> states;  ///< states.size() == jump_times.size() + 1

    std::size_t state_at(double t) const;
};

/// Exact simulation: exponential holding times with rate -lambda_ii, next state
/// drawn with probabilities lambda_ij / -lambda_ii. Absorbing states stop jumping.
RegimePath sample_regime_path(const GeneratorMatrix& generator, std::size_t i0, double t0, double T,
                              std::uint64_t seed);
RegimePath sample_regime_path(const GeneratorMatrix& generator, std::size_t i0, double t0, double T, Rng& rng);

/// Raised when a simulated path produces nonpositive or non-finite wealth or
/// consumption.
class InadmissibleError : public std::runtime_error {
public:
    InadmissibleError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

/// Wealth sampled on the simulation nodes. A regime jump time appears twice:
/// once closing the old segment and once opening the new one.
struct WealthPath {
    std::vector<double> times;
    std::vector<double> wealth;
    std::vector<double> consumption;  ///< dollars per unit time
    std::vector<std::size_t> states;
    std::string policy;
};

/// Wealth under `policy` along a given regime path, starting from x0 at
/// path.start. Linear-in-wealth rules are sampled exactly in law in log space;
/// a dollar stock position falls back to log-space Euler-Maruyama.
WealthPath simulate_wealth(const ModelParams& params, const Policy& policy, const RegimePath& path, double x0,
                           std::size_t n_substeps, std::uint64_t seed);

struct McSettings {
    std::size_t n_paths = 100000;
    std::uint64_t seed = 20240601;
    std::size_t n_substeps = 64;  ///< simulation intervals per unit time
    std::size_t n_workers = 1;
};

struct ThetaEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    double rho = 0.0;  ///< discount rate of the evaluation regime
};

/// Theta estimate plus summary statistics of terminal wealth.
struct PolicyEvaluation {
    ThetaEstimate theta;
    double wealth_mean = 0.0;
    double wealth_sd = 0.0;
    double wealth_min = 0.0;
    double wealth_max = 0.0;
};

/// Monte Carlo estimate of
///   E[ int_t^T e^{-rho_i (s-t)} U(c(s)) ds + e^{-rho_i (T-t)} U(X(T)) ]
/// started from wealth x in regime i at time t. The discount rate stays rho_i
/// for the whole path.
ThetaEstimate estimate_theta(const ModelParams& params, const Policy& policy, double t, double x, std::size_t regime,
                             const McSettings& mc);
PolicyEvaluation evaluate_policy(const ModelParams& params, const Policy& policy, double t, double x,
                                 std::size_t regime, const McSettings& mc);

/// Constant deviation applied on [t, t + eps]; unset components follow the
/// subgame-perfect rule. The stock component is either a dollar amount or a
/// share of current wealth.
struct SpikeSpec {
    std::optional<double> pi_dollars;
    std::optional<double> c_rate;
    std::optional<double> pi_fraction;
};

struct SpikeGap {
    double epsilon = 0.0;
    double gap = 0.0;  ///< (Theta(spp) - Theta(spike)) / eps
    double std_error = 0.0;
};

/// Paired estimates with common random numbers: both rules see the same
/// regime path and the same Gaussian draws on the same time grid.
std::vector<SpikeGap> spike_gap(const ModelParams& params, std::shared_ptr<const GTable> table, double t, double x,
                                std::size_t regime, const SpikeSpec& spike, const std::vector<double>& epsilons,
                                const McSettings& mc);

}  // namespace regimecons
