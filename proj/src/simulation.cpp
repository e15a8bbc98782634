#include "regimecons/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

namespace regimecons {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

[[noreturn]] void inadmissible(const char* what, double value, double t) {
    std::ostringstream os;
    os << what << " = " << value << " at t = " << t;
    throw InadmissibleError(os.str(), t);
}

/// Walks one path segment by segment. Segment boundaries are the regime jump
/// times, the requested break points, and the spike interval ends. Calls
/// `on_node(u, regime, x, c_ratio, simpson_weight)` at every node of every
/// segment and returns the terminal wealth.
template <class OnNode>
double walk_path(const ModelParams& p, const Policy& policy, const RegimePath& path, double x0,
                 std::size_t n_substeps, std::vector<double> breaks, Rng& rng, OnNode&& on_node) {
    const auto& spike = policy.spike_override();
    if (spike) {
        breaks.push_back(spike->t0);
        breaks.push_back(spike->t1);
    }
    breaks.insert(breaks.end(), path.jump_times.begin(), path.jump_times.end());
    std::erase_if(breaks, [&](double b) { return !(b > path.start && b < path.end); });
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    breaks.push_back(path.end);

    std::normal_distribution<double> normal;
    double x = x0;
    double a = path.start;
    std::size_t jump = 0;
    for (double b : breaks) {
        while (jump < path.jump_times.size() && path.jump_times[jump] <= a) ++jump;
        const std::size_t regime = path.states[jump];
        const auto& coef = p.regimes[regime];
        const double mu = coef.mu(), sig = coef.sigma, r = coef.r;
        const bool spike_on = policy.spike_active(0.5 * (a + b));
        const double f = policy.investment_fraction(0.5 * (a + b), regime);
        const bool fixed_c = spike_on && spike->c_rate.has_value();
        const bool fixed_pi = spike_on && spike->pi_dollars.has_value();
        const double c_spike = fixed_c ? *spike->c_rate : 0.0;
        const double pi_spike = fixed_pi ? *spike->pi_dollars : 0.0;
        auto ratio = [&](double u) { return fixed_c ? c_spike : policy.base_consumption_rate(u, regime); };

        const double len = b - a;
        const auto m = std::max<std::size_t>(
            2, 2 * static_cast<std::size_t>(std::ceil(len * static_cast<double>(n_substeps) / 2.0)));
        const double h = len / static_cast<double>(m);
        const double sqrt_h = std::sqrt(h);
        const double w_end = h / 3.0;

        double c0 = ratio(a);
        on_node(a, regime, x, c0, w_end);
        for (std::size_t k = 0; k < m; ++k) {
            const double u0 = a + static_cast<double>(k) * h;
            const double u1 = (k + 1 == m) ? b : a + static_cast<double>(k + 1) * h;
            const double z = normal(rng);
            double c1;
            if (!fixed_pi) {
                const double cm = ratio(u0 + 0.5 * h);
                c1 = ratio(u1);
                const double consumed = (c0 + 4.0 * cm + c1) * h / 6.0;
                x *= std::exp((r + mu * f - 0.5 * sig * sig * f * f) * h - consumed + sig * f * sqrt_h * z);
            } else {
                const double q = pi_spike / x;
                x *= std::exp((r + mu * q - c0 - 0.5 * sig * sig * q * q) * h + sig * q * sqrt_h * z);
                c1 = ratio(u1);
            }
            if (!(x > 0.0) || !std::isfinite(x)) inadmissible("wealth", x, u1);
            const double w = (k + 1 == m) ? w_end : ((k % 2 == 0) ? 4.0 : 2.0) * h / 3.0;
            on_node(u1, regime, x, c1, w);
            c0 = c1;
        }
        a = b;
    }
    return x;
}

struct PathOutcome {
    double value;
    double terminal_wealth;
};

PathOutcome path_functional(const ModelParams& p, const Policy& policy, const RegimePath& path, double x0,
                            std::size_t n_substeps, const std::vector<double>& breaks, double rho, Rng& rng) {
    const double t = path.start;
    const CrraUtility u(p.gamma);
    double running = 0.0;
    const double xT = walk_path(p, policy, path, x0, n_substeps, breaks, rng,
                                [&](double s, std::size_t, double x, double c_ratio, double w) {
                                    const double c = c_ratio * x;
                                    if (!(c > 0.0) || !std::isfinite(c)) inadmissible("consumption", c, s);
                                    running += w * std::exp(-rho * (s - t)) * u.value(c);
                                });
    return {running + std::exp(-rho * (p.T - t)) * u.value(xT), xT};
}

/// Runs `per_path(index)` for every path, splitting the index range into
/// contiguous blocks across workers. Results are written by index, so the
/// caller's reduction order is independent of the worker count.
template <class PerPath>
void for_each_path(std::size_t n_paths, std::size_t n_workers, PerPath&& per_path) {
    n_workers = std::clamp<std::size_t>(n_workers, 1, std::max<std::size_t>(n_paths, 1));
    std::vector<std::exception_ptr> errors(n_workers);
    auto run = [&](std::size_t w) {
        const std::size_t lo = n_paths * w / n_workers, hi = n_paths * (w + 1) / n_workers;
        try {
            for (std::size_t k = lo; k < hi; ++k) per_path(k);
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (n_workers == 1) {
        run(0);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(run, w);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct MeanSe {
    double mean;
    double se;
};

MeanSe mean_and_se(const std::vector<double>& v) {
    const auto n = static_cast<double>(v.size());
    double sum = 0.0;
    for (double y : v) sum += y;
    const double mean = sum / n;
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double y : v) ss += (y - mean) * (y - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

void check_mc(const ModelParams& p, const McSettings& mc, double t, double x, std::size_t regime) {
    if (mc.n_paths == 0) throw std::invalid_argument("Monte Carlo run needs n_paths > 0");
    if (mc.n_substeps == 0) throw std::invalid_argument("Monte Carlo run needs n_substeps > 0");
    if (!(x > 0.0)) throw std::domain_error("initial wealth must be > 0");
    if (!(t >= 0.0 && t <= p.T)) throw std::domain_error("evaluation time outside [0, T]");
    if (regime >= p.n_regimes()) throw std::out_of_range("regime index out of range");
}

}  // namespace

Rng path_engine(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

std::size_t RegimePath::state_at(double t) const {
    const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    return states[static_cast<std::size_t>(it - jump_times.begin())];
}

RegimePath sample_regime_path(const GeneratorMatrix& L, std::size_t i0, double t0, double T, Rng& rng) {
    if (i0 >= L.size()) throw std::out_of_range("initial regime out of range");
    if (!(t0 <= T)) throw std::invalid_argument("regime path needs t0 <= T");
    RegimePath path{t0, T, {}, {i0}};
    std::size_t state = i0;
    double t = t0;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (;;) {
        const double rate = L.exit_rate(state);
        if (!(rate > 0.0)) break;
        t += std::exponential_distribution<double>(rate)(rng);
        if (!(t < T)) break;
        double target = unif(rng) * rate;
        std::size_t next = state;
        for (std::size_t j = 0; j < L.size(); ++j) {
            if (j == state || L(state, j) <= 0.0) continue;
            next = j;
            target -= L(state, j);
            if (target < 0.0) break;
        }
        path.jump_times.push_back(t);
        path.states.push_back(next);
        state = next;
    }
    return path;
}

RegimePath sample_regime_path(const GeneratorMatrix& generator, std::size_t i0, double t0, double T,
                              std::uint64_t seed) {
    Rng rng = path_engine(seed, 0);
    return sample_regime_path(generator, i0, t0, T, rng);
}

WealthPath simulate_wealth(const ModelParams& params, const Policy& policy, const RegimePath& path, double x0,
                           std::size_t n_substeps, std::uint64_t seed) {
    if (!(x0 > 0.0)) throw std::domain_error("initial wealth must be > 0");
    if (n_substeps == 0) throw std::invalid_argument("n_substeps must be > 0");
    WealthPath out;
    out.policy = policy.name();
    Rng rng = path_engine(seed, 0);
    walk_path(params, policy, path, x0, n_substeps, {}, rng,
              [&](double u, std::size_t regime, double x, double c_ratio, double) {
                  out.times.push_back(u);
                  out.wealth.push_back(x);
                  out.consumption.push_back(c_ratio * x);
                  out.states.push_back(regime);
              });
    return out;
}

PolicyEvaluation evaluate_policy(const ModelParams& p, const Policy& policy, double t, double x, std::size_t regime,
                                 const McSettings& mc) {
    check_mc(p, mc, t, x, regime);
    const double rho = p.regimes[regime].rho;
    PolicyEvaluation out;
    out.theta.n_paths = mc.n_paths;
    out.theta.seed = mc.seed;
    out.theta.rho = rho;
    if (t == p.T) {
        out.theta.mean = utility_eval(p.gamma, x);
        out.wealth_mean = out.wealth_min = out.wealth_max = x;
        return out;
    }

    std::vector<double> values(mc.n_paths), wealth(mc.n_paths);
    for_each_path(mc.n_paths, mc.n_workers, [&](std::size_t k) {
        Rng rng = path_engine(mc.seed, k);
        const RegimePath path = sample_regime_path(p.generator, regime, t, p.T, rng);
        const auto r = path_functional(p, policy, path, x, mc.n_substeps, {}, rho, rng);
        values[k] = r.value;
        wealth[k] = r.terminal_wealth;
    });

    const auto theta = mean_and_se(values);
    out.theta.mean = theta.mean;
    out.theta.std_error = theta.se;
    const auto w = mean_and_se(wealth);
    out.wealth_mean = w.mean;
    out.wealth_sd = w.se * std::sqrt(static_cast<double>(wealth.size()));
    const auto [lo, hi] = std::minmax_element(wealth.begin(), wealth.end());
    out.wealth_min = *lo;
    out.wealth_max = *hi;
    return out;
}

ThetaEstimate estimate_theta(const ModelParams& params, const Policy& policy, double t, double x,
                             std::size_t regime, const McSettings& mc) {
    return evaluate_policy(params, policy, t, x, regime, mc).theta;
}

std::vector<SpikeGap> spike_gap(const ModelParams& p, std::shared_ptr<const GTable> table, double t, double x,
                                std::size_t regime, const SpikeSpec& spike, const std::vector<double>& epsilons,
                                const McSettings& mc) {
    check_mc(p, mc, t, x, regime);
    const double rho = p.regimes[regime].rho;
    const Policy base = Policy::subgame_perfect(p, std::move(table));

    std::vector<SpikeGap> out;
    for (double eps : epsilons) {
        if (!(eps > 0.0) || !(t + eps <= p.T)) throw std::invalid_argument("spike length must satisfy 0 < eps <= T - t");
        const Policy perturbed = Policy::spike(base, {t, t + eps, spike.pi_dollars, spike.c_rate, spike.pi_fraction});
        const std::vector<double> breaks{t + eps};

        std::vector<double> diffs(mc.n_paths);
        for_each_path(mc.n_paths, mc.n_workers, [&](std::size_t k) {
            Rng rng = path_engine(mc.seed, k);
            const RegimePath path = sample_regime_path(p.generator, regime, t, p.T, rng);
            Rng rng_base = rng;
            Rng rng_spike = rng;
            const double v_base = path_functional(p, base, path, x, mc.n_substeps, breaks, rho, rng_base).value;
            const double v_spike =
                path_functional(p, perturbed, path, x, mc.n_substeps, breaks, rho, rng_spike).value;
            diffs[k] = (v_base - v_spike) / eps;
        });
        const auto s = mean_and_se(diffs);
        out.push_back({eps, s.mean, s.se});
    }
    return out;
}

}  // namespace regimecons
