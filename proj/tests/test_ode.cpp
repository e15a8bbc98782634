#include <doctest.h>

#include <cmath>

#include "regimecons/ode.hpp"

using namespace regimecons;

namespace {

ModelParams single_regime(double r, double mu, double sigma, double rho, double gamma, double T = 1.0) {
    ModelParams p;
    p.T = T;
    p.gamma = gamma;
    p.regimes = {{r, r + mu, sigma, rho}};
    p.generator = GeneratorMatrix::zero(1);
    return p;
}

ModelParams constant_rate_fig1(double gamma = 0.5) {
    auto p = figure_params(1, gamma);
    p.regimes[0].rho = p.regimes[1].rho = 0.06;
    return p;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

}  // namespace

TEST_CASE("terminal condition holds exactly for every series") {
    const auto table = solve_all(figure_params(2, 0.5), {256});
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(table.values(Series::g(), i).back() == 1.0);
        CHECK(table.values(Series::gbar(1 - i), i).back() == 1.0);
        CHECK(table.values(Series::ghat(0), i).back() == 1.0);
        CHECK(table.values(Series::ghat(1), i).back() == 1.0);
        CHECK(eval_g(table, 1.0, i, Series::g()) == 1.0);
    }
}

TEST_CASE("merton_closed_form examples") {
    CHECK(merton_closed_form(0.05, 0.05, 0.2, 0.1, 0.5, 1.0, 1.0) == 1.0);
    // a = 0 when gamma r + gamma mu^2/(2 sigma^2 (1-gamma)) = rho.
    CHECK(merton_closed_form(0.05, 0.0, 0.2, 0.025, 0.5, 1.0, 0.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(merton_closed_form(0.0, 0.0, 0.2, 0.0, -1.0, 3.0, 2.0) == doctest::Approx(4.0).epsilon(1e-15));
    // Reference from tests/oracles/merton_oracle.py (40-digit closed form,
    // DOP853 and a 1e6-step RK4 march of the g ODE agree to 4e-14).
    CHECK(std::abs(merton_closed_form(0.05, 0.05, 0.2, 0.1, 0.5, 1.0, 0.0) - 1.3688380040586006) < 1e-14);
    // Log utility: phi' = rho phi - 1, g = phi.
    const double rho = 0.1;
    const double expected = std::exp(-rho) + (std::exp(-rho) - 1.0) / -rho;
    CHECK(merton_closed_form(0.03, 0.05, 0.2, rho, 0.0, 1.0, 0.0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("single regime solve matches the closed form") {
    const auto p = single_regime(0.05, 0.05, 0.2, 0.1, 0.5);
    const auto table = solve_spp_system(p, {4096});
    CHECK(std::abs(table.values(Series::g(), 0)[0] / 1.3688380040586006 - 1.0) <= 1e-8);
    double worst = 0.0;
    for (std::size_t k = 0; k < table.grid().size(); k += 64) {
        const double exact = merton_closed_form(0.05, 0.05, 0.2, 0.1, 0.5, 1.0, table.grid()[k]);
        worst = std::max(worst, std::abs(table.values(Series::g(), 0)[k] / exact - 1.0));
    }
    CHECK(worst <= 1e-12);

    SUBCASE("log utility") {
        const auto q = single_regime(0.03, 0.05, 0.2, 0.1, 0.0, 2.0);
        const auto t2 = solve_spp_system(q, {2048});
        CHECK(t2.values(Series::g(), 0)[0] ==
              doctest::Approx(merton_closed_form(0.03, 0.05, 0.2, 0.1, 0.0, 2.0, 0.0)).epsilon(1e-12));
    }
    SUBCASE("negative exponent") {
        const auto q = single_regime(0.02, 0.06, 0.25, 0.05, -2.0, 5.0);
        const auto t2 = solve_spp_system(q, {2048});
        CHECK(t2.values(Series::g(), 0)[0] ==
              doctest::Approx(merton_closed_form(0.02, 0.06, 0.25, 0.05, -2.0, 5.0, 0.0)).epsilon(1e-11));
    }
}

TEST_CASE("two-regime solutions match an independent DOP853 solve") {
    // Values from tests/oracles/two_regime_oracle.py (scipy DOP853, rtol 1e-13).
    SUBCASE("figure 1") {
        const auto t = solve_spp_system(figure_params(1, 0.5), {2048});
        CHECK(std::abs(eval_g(t, 0.0, 0, Series::g()) - 1.265670089304140) < 1e-11);
        CHECK(std::abs(eval_g(t, 0.0, 1, Series::g()) - 1.513177888416584) < 1e-11);
        CHECK(std::abs(eval_g(t, 0.0, 0, Series::gbar(1)) - 1.510944470835045) < 1e-11);
        CHECK(std::abs(eval_g(t, 0.0, 1, Series::gbar(0)) - 1.263801815965834) < 1e-11);
        CHECK(std::abs(eval_g(t, 0.5, 0, Series::g()) - 1.150961093304077) < 1e-11);
        CHECK(std::abs(eval_g(t, 0.5, 1, Series::gbar(0)) - 1.150493192580656) < 1e-11);
    }
    SUBCASE("figure 2") {
        const auto t = solve_spp_system(figure_params(2, 0.5), {2048});
        CHECK(std::abs(eval_g(t, 0.0, 0, Series::g()) - 1.497619726763543) < 1e-11);
        CHECK(std::abs(eval_g(t, 0.0, 1, Series::g()) - 1.524011968473405) < 1e-11);
        CHECK(std::abs(eval_g(t, 0.0, 0, Series::gbar(1)) - 1.509148250745165) < 1e-11);
        CHECK(std::abs(eval_g(t, 0.0, 1, Series::gbar(0)) - 1.512341970401167) < 1e-11);
        CHECK(std::abs(eval_g(t, 0.5, 1, Series::g()) - 1.277875828492004) < 1e-11);
    }
}

TEST_CASE("figure 1: the high-discount state has the smaller g") {
    const auto t = solve_spp_system(figure_params(1, 0.5));
    const auto g0 = t.values(Series::g(), 0), g1 = t.values(Series::g(), 1);
    for (std::size_t k = 0; k + 1 < g0.size(); ++k) CHECK(g0[k] < g1[k]);
}

TEST_CASE("pre-commitment system") {
    SUBCASE("constant rate: ghat equals g") {
        const auto p = constant_rate_fig1();
        const auto spp = solve_spp_system(p);
        const auto pre = solve_precommitment(p, 0.06);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(pre.values[i].back() == 1.0);
            CHECK(max_abs_diff(pre.values[i], spp.values(Series::g(), i)) <= 1e-8);
        }
    }
    SUBCASE("identical markets: ghat is symmetric across states") {
        const auto p = figure_params(1, 0.5);
        for (double rho : {0.3, 0.06}) {
            const auto pre = solve_precommitment(p, rho);
            CHECK(max_abs_diff(pre.values[0], pre.values[1]) <= 1e-10);
        }
    }
    SUBCASE("rejects a nonpositive rate") {
        CHECK_THROWS_AS(solve_precommitment(figure_params(1, 0.5), 0.0), std::invalid_argument);
    }
}

TEST_CASE("constant rate collapse of all four functions") {
    for (double gamma : {-1.0, 0.0, 0.5, 0.8}) {
        const auto t = solve_all(constant_rate_fig1(gamma));
        for (std::size_t i = 0; i < 2; ++i) {
            const auto g = t.values(Series::g(), i);
            CHECK(max_abs_diff(g, t.values(Series::gbar(1 - i), i)) <= 1e-8);
            CHECK(max_abs_diff(g, t.values(Series::ghat(0), i)) <= 1e-8);
            CHECK(max_abs_diff(g, t.values(Series::ghat(1), i)) <= 1e-8);
        }
    }
}

TEST_CASE("fourth-order convergence under step halving") {
    const auto p = figure_params(1, 0.5);
    auto g0 = [&](std::size_t n) { return solve_spp_system(p, {n}).values(Series::g(), 0)[0]; };
    const double a = g0(16), b = g0(32), c = g0(64);
    CHECK(std::abs(a - b) / std::abs(b - c) >= 12.0);
}

TEST_CASE("relabelling the states permutes the solution") {
    auto p = figure_params(2, 0.7);
    auto q = p;
    std::swap(q.regimes[0], q.regimes[1]);
    q.generator = GeneratorMatrix({{-1.5, 1.5}, {2.0, -2.0}});
    const auto a = solve_all(p), b = solve_all(q);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(max_abs_diff(a.values(Series::g(), i), b.values(Series::g(), 1 - i)) <= 1e-12);
        CHECK(max_abs_diff(a.values(Series::gbar(1 - i), i), b.values(Series::gbar(i), 1 - i)) <= 1e-12);
        CHECK(max_abs_diff(a.values(Series::ghat(0), i), b.values(Series::ghat(1), 1 - i)) <= 1e-12);
    }
}

TEST_CASE("three regimes lumpable onto two reproduce the two-regime solution") {
    // Regimes 1 and 2 are copies; the chain lumped on {0}, {1, 2} has rates 3 and 1.5.
    auto three = figure_params(2, 0.5);
    three.regimes.push_back(three.regimes[1]);
    three.generator = GeneratorMatrix({{-3.0, 1.0, 2.0}, {1.5, -2.5, 1.0}, {1.5, 0.7, -2.2}});
    auto two = figure_params(2, 0.5);
    two.generator = GeneratorMatrix({{-3.0, 3.0}, {1.5, -1.5}});
    const auto a = solve_all(three), b = solve_all(two);
    CHECK(max_abs_diff(a.values(Series::g(), 0), b.values(Series::g(), 0)) <= 1e-12);
    CHECK(max_abs_diff(a.values(Series::g(), 1), b.values(Series::g(), 1)) <= 1e-12);
    CHECK(max_abs_diff(a.values(Series::g(), 2), b.values(Series::g(), 1)) <= 1e-12);
    CHECK(max_abs_diff(a.values(Series::gbar(1), 0), b.values(Series::gbar(1), 0)) <= 1e-12);
    CHECK(max_abs_diff(a.values(Series::gbar(2), 0), b.values(Series::gbar(1), 0)) <= 1e-12);
    CHECK(max_abs_diff(a.values(Series::gbar(0), 2), b.values(Series::gbar(0), 1)) <= 1e-12);
    CHECK(max_abs_diff(a.values(Series::gbar(2), 1), b.values(Series::g(), 1)) <= 1e-12);
    CHECK(max_abs_diff(a.values(Series::ghat(2), 0), b.values(Series::ghat(1), 0)) <= 1e-12);
}

TEST_CASE("a priori bounds") {
    SUBCASE("contain the solution for several configurations") {
        for (auto p : {figure_params(1, 0.5), figure_params(2, 0.5), constant_rate_fig1(), figure_params(1, -1.0),
                       figure_params(2, 0.0), figure_params(1, 0.8)}) {
            const auto b = g_bounds(p);
            const auto t = solve_spp_system(p);
            for (std::size_t m = 0; m < t.grid().size(); ++m) {
                double sum = 0.0;
                for (std::size_t i = 0; i < 2; ++i) {
                    for (std::size_t k = 0; k < 2; ++k) {
                        const double v = t.values(Series::gbar(k), i)[m];
                        CHECK(v >= b.gbar_lower[i][k]);
                        sum += v;
                    }
                }
                CHECK(sum <= b.upper);
            }
        }
    }
    SUBCASE("constant single regime lower bound by hand") {
        const auto p = single_regime(0.05, 0.05, 0.2, 0.3, 0.5, 2.0);
        const double alpha = -(0.5 * 0.05 + 0.5 * 0.0025 / (2 * 0.04 * 0.5) - 0.3);
        CHECK(g_bounds(p).g_lower[0] == doctest::Approx(std::exp(-alpha * 2.0)).epsilon(1e-14));
    }
    SUBCASE("zero rates with log utility contain g = 1 + (T - t)") {
        ModelParams p;
        p.T = 1.5;
        p.gamma = 0.0;
        p.regimes = {{0.0, 0.0, 0.2, 0.0}};
        p.generator = GeneratorMatrix::zero(1);
        const auto b = g_bounds(p);
        CHECK(b.g_lower[0] == 1.0);
        for (double t : {0.0, 0.5, 1.0, 1.5}) {
            const double g = 1.0 + (p.T - t);
            CHECK(g >= b.g_lower[0]);
            CHECK(g <= b.upper);
        }
    }
}

TEST_CASE("eval_g") {
    const auto t = solve_all(figure_params(1, 0.5), {1024});
    SUBCASE("exact at nodes and at T") {
        for (std::size_t k : {0u, 1u, 17u, 512u, 1023u, 1024u}) {
            CHECK(eval_g(t, t.grid()[k], 0, Series::g()) == t.values(Series::g(), 0)[k]);
            CHECK(eval_g(t, t.grid()[k], 1, Series::ghat(1)) == t.values(Series::ghat(1), 1)[k]);
        }
        CHECK(eval_g(t, 1.0, 0, Series::gbar(1)) == 1.0);
    }
    SUBCASE("outside [0, T] is a domain error") {
        CHECK_THROWS_AS(eval_g(t, -1e-9, 0, Series::g()), std::domain_error);
        CHECK_THROWS_AS(eval_g(t, 1.0 + 1e-9, 0, Series::g()), std::domain_error);
    }
    SUBCASE("midpoints agree with a solve whose nodes sit there") {
        const auto fine = solve_all(figure_params(1, 0.5), {2048});
        double worst = 0.0;
        for (std::size_t k = 1; k < 2048; k += 2) {
            for (std::size_t i = 0; i < 2; ++i) {
                worst = std::max(worst, std::abs(eval_g(t, fine.grid()[k], i, Series::g()) -
                                                 fine.values(Series::g(), i)[k]));
                worst = std::max(worst, std::abs(eval_g(t, fine.grid()[k], i, Series::gbar(1 - i)) -
                                                 fine.values(Series::gbar(1 - i), i)[k]));
            }
        }
        CHECK(worst <= 1e-9);
    }
    SUBCASE("unsolved series") {
        const auto spp = solve_spp_system(figure_params(1, 0.5), {64});
        CHECK_FALSE(spp.has(Series::ghat(0)));
        CHECK_THROWS_AS(spp.values(Series::ghat(0), 0), std::logic_error);
    }
}

TEST_CASE("solver settings and failure modes") {
    CHECK_THROWS_AS(solve_spp_system(figure_params(1, 0.5), {8}), std::invalid_argument);
    CHECK_THROWS_AS(solve_spp_system(figure_params(1, 1.0)), ValidationError);

    SolverSettings s{64, true};
    const auto t = solve_all(figure_params(1, 0.5), s);
    REQUIRE(t.richardson_gap.has_value());
    CHECK(*t.richardson_gap > 0.0);
    CHECK(*t.richardson_gap < 1e-8);

    // A stiff decay rate on a coarse grid drives an RK4 stage negative.
    auto p = single_regime(0.05, 0.05, 0.2, 30.0, 0.9, 40.0);
    try {
        (void)solve_spp_system(p, {16});
        FAIL("expected a solver failure");
    } catch (const SolverError& e) {
        CHECK(e.time() >= 0.0);
        CHECK(e.time() <= 40.0);
        CHECK(std::string(e.what()).find("t =") != std::string::npos);
    }
}
