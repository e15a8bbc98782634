#include <doctest.h>

#include <cmath>
#include <numeric>

#include "regimecons/simulation.hpp"

using namespace regimecons;

namespace {

GeneratorMatrix switching() { return GeneratorMatrix({{-2.0, 2.0}, {1.5, -1.5}}); }

ModelParams single_regime(double r, double mu, double sigma, double rho, double gamma) {
    ModelParams p;
    p.gamma = gamma;
    p.regimes = {{r, r + mu, sigma, rho}};
    p.generator = GeneratorMatrix::zero(1);
    return p;
}

struct Stats {
    double mean, se;
};

Stats stats(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace

TEST_CASE("regime paths") {
    SUBCASE("zero generator never jumps") {
        for (std::uint64_t s = 0; s < 50; ++s) {
            const auto path = sample_regime_path(GeneratorMatrix::zero(2), 1, 0.0, 10.0, s);
            CHECK(path.jump_times.empty());
            CHECK(path.states == std::vector<std::size_t>{1});
            CHECK(path.state_at(7.0) == 1);
        }
    }
    SUBCASE("structure") {
        const auto path = sample_regime_path(switching(), 0, 0.5, 20.0, 7);
        REQUIRE(path.states.size() == path.jump_times.size() + 1);
        CHECK(path.states.front() == 0);
        for (std::size_t k = 0; k < path.jump_times.size(); ++k) {
            CHECK(path.jump_times[k] > 0.5);
            CHECK(path.jump_times[k] < 20.0);
            if (k) CHECK(path.jump_times[k] > path.jump_times[k - 1]);
            CHECK(path.states[k] != path.states[k + 1]);
            CHECK(path.state_at(path.jump_times[k]) == path.states[k + 1]);
        }
        CHECK(path.state_at(0.5) == 0);
    }
    SUBCASE("mean holding time in state 0 is 1 / 2") {
        std::vector<double> sojourn;
        for (std::uint64_t s = 0; s < 10000; ++s) {
            const auto path = sample_regime_path(switching(), 0, 0.0, 100.0, path_engine(3, s)());
            REQUIRE_FALSE(path.jump_times.empty());
            sojourn.push_back(path.jump_times.front());
        }
        const auto st = stats(sojourn);
        CHECK(std::abs(st.mean - 0.5) <= 4.0 * st.se);
    }
    SUBCASE("long-run occupation of state 0 is 3 / 7") {
        std::vector<double> occupation;
        const double T = 50.0;
        for (std::uint64_t s = 0; s < 2000; ++s) {
            auto rng = path_engine(11, s);
            const std::size_t i0 = std::uniform_real_distribution<double>()(rng) < 1.5 / 3.5 ? 0 : 1;
            const auto path = sample_regime_path(switching(), i0, 0.0, T, rng);
            double in0 = 0.0, a = 0.0;
            for (std::size_t k = 0; k <= path.jump_times.size(); ++k) {
                const double b = k < path.jump_times.size() ? path.jump_times[k] : T;
                if (path.states[k] == 0) in0 += b - a;
                a = b;
            }
            occupation.push_back(in0 / T);
        }
        const auto st = stats(occupation);
        CHECK(std::abs(st.mean - 1.5 / 3.5) <= 3.0 * st.se);
    }
    SUBCASE("bad interval") {
        CHECK_THROWS_AS(sample_regime_path(switching(), 0, 2.0, 1.0, 1), std::invalid_argument);
    }
}

TEST_CASE("wealth dynamics") {
    SUBCASE("without a risk premium wealth grows deterministically") {
        const auto p = single_regime(0.04, 0.0, 0.2, 0.1, 0.5);
        const auto table = std::make_shared<const GTable>(solve_all(p, {1024}));
        const auto pol = Policy::subgame_perfect(p, table);
        const auto path = sample_regime_path(p.generator, 0, 0.0, 1.0, 1);
        const auto a = simulate_wealth(p, pol, path, 2.0, 64, 1);
        const auto b = simulate_wealth(p, pol, path, 2.0, 64, 99);
        CHECK(a.wealth == b.wealth);
        // log X(T) = log x0 + r T - int_0^T C(s) ds
        const std::size_t m = 20000;
        double integral = 0.0;
        for (std::size_t k = 0; k <= m; ++k) {
            const double w = (k == 0 || k == m) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            integral += w * pol.consumption_rate(static_cast<double>(k) / m, 0);
        }
        integral /= 3.0 * m;
        CHECK(std::abs(std::log(a.wealth.back() / 2.0) - (0.04 - integral)) <= 1e-8);
        CHECK(a.times.front() == 0.0);
        CHECK(a.times.back() == 1.0);
        CHECK(a.consumption.front() == doctest::Approx(2.0 * pol.consumption_rate(0.0, 0)).epsilon(1e-14));
    }
    SUBCASE("jump times appear twice on the node grid") {
        const auto p = figure_params(2, 0.5);
        const auto table = std::make_shared<const GTable>(solve_all(p, {256}));
        const auto pol = Policy::subgame_perfect(p, table);
        const auto path = sample_regime_path(p.generator, 0, 0.0, 1.0, 5);
        const auto w = simulate_wealth(p, pol, path, 1.0, 32, 5);
        for (double j : path.jump_times) CHECK(std::count(w.times.begin(), w.times.end(), j) == 2);
        CHECK(w.states.front() == 0);
        CHECK(w.policy == "spp");
    }
    SUBCASE("log wealth moments under a constant-ratio rule") {
        const auto p = single_regime(0.03, 0.05, 0.25, 0.1, -1.0);
        const auto table = std::make_shared<const GTable>(solve_all(p, {256}));
        const auto pol = Policy::spike(Policy::subgame_perfect(p, table), {0.0, 1.0, std::nullopt, 0.2});
        const double f = investment_fraction(p, 0);
        std::vector<double> logs, levels;
        for (std::uint64_t s = 0; s < 20000; ++s) {
            const auto w = simulate_wealth(p, pol, {0.0, 1.0, {}, {0}}, 1.0, 8, s);
            logs.push_back(std::log(w.wealth.back()));
            levels.push_back(w.wealth.back());
        }
        const auto lg = stats(logs);
        CHECK(std::abs(lg.mean - (0.03 + f * 0.05 - 0.2 - 0.5 * f * f * 0.0625)) <= 4.0 * lg.se);
        const auto lv = stats(levels);
        CHECK(std::abs(lv.mean - std::exp(0.03 + f * 0.05 - 0.2)) <= 4.0 * lv.se);
    }
    SUBCASE("wealth plus consumption discounted at the mean growth rate is a martingale") {
        const auto p = single_regime(0.05, 0.05, 0.2, 0.1, -1.0);
        const double r = 0.05 + investment_fraction(p, 0) * 0.05;
        const auto table = std::make_shared<const GTable>(solve_all(p, {512}));
        const auto pol = Policy::subgame_perfect(p, table);
        std::vector<double> total;
        for (std::uint64_t s = 0; s < 20000; ++s) {
            const auto w = simulate_wealth(p, pol, {0.0, 1.0, {}, {0}}, 1.0, 64, s);
            double consumed = 0.0;
            for (std::size_t k = 1; k < w.times.size(); ++k) {
                const double h = w.times[k] - w.times[k - 1];
                consumed += 0.5 * h * (std::exp(-r * w.times[k]) * w.consumption[k] +
                                       std::exp(-r * w.times[k - 1]) * w.consumption[k - 1]);
            }
            total.push_back(std::exp(-r) * w.wealth.back() + consumed);
        }
        const auto st = stats(total);
        CHECK(std::abs(st.mean - 1.0) <= 4.0 * st.se);
    }
    SUBCASE("a huge dollar stock position from tiny wealth is inadmissible") {
        const auto p = single_regime(0.03, 0.05, 0.25, 0.1, 0.5);
        const auto table = std::make_shared<const GTable>(solve_all(p, {256}));
        const auto pol = Policy::spike(Policy::subgame_perfect(p, table), {0.0, 0.5, 1e3, std::nullopt});
        try {
            (void)simulate_wealth(p, pol, {0.0, 1.0, {}, {0}}, 1e-3, 64, 1);
            FAIL("expected InadmissibleError");
        } catch (const InadmissibleError& e) {
            CHECK(e.time() > 0.0);
            CHECK(e.time() <= 0.5);
        }
        CHECK_THROWS_AS(simulate_wealth(p, pol, {0.0, 1.0, {}, {0}}, 0.0, 64, 1), std::domain_error);
    }
}

TEST_CASE("theta estimates") {
    const auto p = figure_params(1, 0.5);
    const auto table = std::make_shared<const GTable>(solve_all(p, {1024}));
    const auto spp = Policy::subgame_perfect(p, table);
    McSettings mc{20000, 42, 64, 1};

    SUBCASE("at the horizon theta is the bequest utility") {
        const auto est = estimate_theta(p, spp, 1.0, 2.0, 0, mc);
        CHECK(est.mean == CrraUtility(0.5).value(2.0));
        CHECK(est.std_error == 0.0);
    }
    SUBCASE("subgame-perfect theta matches the value coefficient") {
        for (std::size_t i = 0; i < 2; ++i) {
            const auto est = estimate_theta(p, spp, 0.0, 1.0, i, mc);
            const double v = table->value(Series::g(), i, 0.0) * CrraUtility(0.5).value(1.0);
            CHECK(std::abs(est.mean - v) <= 3.0 * est.std_error);
            CHECK(est.rho == p.regimes[i].rho);
            CHECK(est.n_paths == 20000);
        }
    }
    SUBCASE("single regime pre-commitment matches the closed form") {
        const auto q = single_regime(0.05, 0.05, 0.2, 0.1, 0.5);
        const auto t1 = std::make_shared<const GTable>(solve_all(q, {1024}));
        const auto est = estimate_theta(q, Policy::precommitment(q, t1, 0), 0.0, 1.5, 0, mc);
        const double v = merton_closed_form(0.05, 0.05, 0.2, 0.1, 0.5, 1.0, 0.0) * CrraUtility(0.5).value(1.5);
        CHECK(std::abs(est.mean - v) <= 3.0 * est.std_error);
    }
    SUBCASE("deterministic and independent of the worker count") {
        McSettings small{4000, 9, 32, 1};
        const auto a = evaluate_policy(p, spp, 0.25, 1.0, 1, small);
        small.n_workers = 3;
        const auto b = evaluate_policy(p, spp, 0.25, 1.0, 1, small);
        CHECK(a.theta.mean == b.theta.mean);
        CHECK(a.theta.std_error == b.theta.std_error);
        CHECK(a.wealth_mean == b.wealth_mean);
        CHECK(a.wealth_max == b.wealth_max);
        small.seed = 10;
        CHECK(evaluate_policy(p, spp, 0.25, 1.0, 1, small).theta.mean != a.theta.mean);
    }
    SUBCASE("bad settings") {
        CHECK_THROWS_AS(estimate_theta(p, spp, 0.0, 1.0, 0, {0, 1, 64, 1}), std::invalid_argument);
        CHECK_THROWS_AS(estimate_theta(p, spp, 0.0, -1.0, 0, mc), std::domain_error);
        CHECK_THROWS_AS(estimate_theta(p, spp, 1.5, 1.0, 0, mc), std::domain_error);
    }
}

TEST_CASE("spike gaps") {
    const auto p = figure_params(1, 0.5);
    const auto table = std::make_shared<const GTable>(solve_all(p, {1024}));
    McSettings mc{4000, 5, 64, 1};

    SUBCASE("a spike equal to the rule has zero gap") {
        const auto gaps = spike_gap(p, table, 0.0, 1.0, 0, {}, {0.1, 0.05}, mc);
        REQUIRE(gaps.size() == 2);
        for (const auto& g : gaps) {
            CHECK(g.gap == 0.0);
            CHECK(g.std_error == 0.0);
        }
    }
    SUBCASE("doubling consumption is not an improvement") {
        const double c0 = Policy::subgame_perfect(p, table).consumption_rate(0.0, 0);
        const auto gaps = spike_gap(p, table, 0.0, 1.0, 0, {std::nullopt, 2.0 * c0}, {0.1}, mc);
        CHECK(gaps[0].epsilon == 0.1);
        CHECK(gaps[0].gap + 3.0 * gaps[0].std_error >= 0.0);
        CHECK(gaps[0].std_error > 0.0);
    }
    SUBCASE("paired estimates are independent of the worker count") {
        const SpikeSpec s{0.0, std::nullopt};
        const auto a = spike_gap(p, table, 0.0, 1.0, 1, s, {0.05}, mc);
        mc.n_workers = 4;
        const auto b = spike_gap(p, table, 0.0, 1.0, 1, s, {0.05}, mc);
        CHECK(a[0].gap == b[0].gap);
        CHECK(a[0].std_error == b[0].std_error);
    }
    SUBCASE("spike must fit before the horizon") {
        CHECK_THROWS_AS(spike_gap(p, table, 0.9, 1.0, 0, {}, {0.2}, mc), std::invalid_argument);
    }
}
