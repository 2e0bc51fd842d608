#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "epiwin/seird.hpp"

using namespace epiwin;

namespace {

SeirdParams random_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SeirdParams p;
    p.beta_i = 2.0 * u(rng);
    p.beta_e = 2.0 * u(rng);
    p.alpha = 1.0 / 14.0 + u(rng) * (1.0 - 1.0 / 14.0);
    p.gamma = 1.0 / 30.0 + u(rng) * (1.0 - 1.0 / 30.0);
    p.mu = 0.1 * u(rng);
    p.n_pop = 1e4 + 1e6 * u(rng);
    p.c_e = 5.0 * u(rng);
    p.c_r = u(rng);
    return p;
}

// Independent reference: forward Euler with a very fine step.
SeirdState euler_reference(const SeirdParams& params, SeirdState st, double t_end, double h) {
    const long n = std::lround(t_end / h);
    for (long k = 0; k < n; ++k) {
        const SeirdState d = seird_derivatives(st, params);
        st.s += h * d.s;
        st.e += h * d.e;
        st.i += h * d.i;
        st.r += h * d.r;
        st.d += h * d.d;
    }
    return st;
}

double max_norm_diff(const SeirdState& a, const SeirdState& b) {
    return std::max({std::abs(a.s - b.s), std::abs(a.e - b.e), std::abs(a.i - b.i),
                     std::abs(a.r - b.r), std::abs(a.d - b.d)});
}

}  // namespace

TEST_CASE("derivatives: all-zero rates give a zero derivative") {
    SeirdParams p;
    p.n_pop = 1000;
    const SeirdState d = seird_derivatives({900, 50, 30, 15, 5}, p);
    CHECK(d.s == 0.0);
    CHECK(d.e == 0.0);
    CHECK(d.i == 0.0);
    CHECK(d.r == 0.0);
    CHECK(d.d == 0.0);
}

TEST_CASE("derivatives: hand-computed example") {
    SeirdParams p{0.5, 0.0, 0.2, 0.1, 0.01, 1000.0, 0.0, 0.0};
    const SeirdState d = seird_derivatives({999, 0, 1, 0, 0}, p);
    CHECK(d.s == doctest::Approx(-0.4995).epsilon(1e-12));
    CHECK(d.e == doctest::Approx(0.4995).epsilon(1e-12));
    CHECK(d.i == doctest::Approx(-0.11).epsilon(1e-12));
    CHECK(d.r == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(d.d == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("derivatives: flow components sum to exactly zero") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const SeirdParams p = random_params(rng);
        SeirdState st{p.n_pop * u(rng), p.n_pop * u(rng) * 0.1, p.n_pop * u(rng) * 0.1,
                      p.n_pop * u(rng) * 0.1, p.n_pop * u(rng) * 0.01};
        const SeirdState d = seird_derivatives(st, p);
        // Exact cancellation up to floating-point associativity.
        const double scale =
            std::abs(d.s) + std::abs(d.e) + std::abs(d.i) + std::abs(d.r) + std::abs(d.d) + 1.0;
        CHECK(std::abs(d.sum()) <= 1e-13 * scale);
    }
}

TEST_CASE("derivatives: non-finite state is rejected") {
    SeirdParams p;
    p.n_pop = 1000;
    CHECK_THROWS_AS(seird_derivatives({std::nan(""), 0, 0, 0, 0}, p), invalid_state_error);
}

TEST_CASE("initial state: empty epidemic") {
    SeirdParams p;
    p.n_pop = 5000;
    p.c_e = 2.0;
    p.c_r = 0.3;
    const SeirdState st = initial_state_from_observations(0, 0, p);
    CHECK(st.e == 0.0);
    CHECK(st.i == 0.0);
    CHECK(st.r == 0.0);
    CHECK(st.d == 0.0);
    CHECK(st.s == 5000.0);
}

TEST_CASE("initial state: hand-computed example") {
    SeirdParams p;
    p.n_pop = 10000;
    p.c_e = 1.0;
    p.c_r = 0.5;
    const SeirdState st = initial_state_from_observations(100, 10, p);
    CHECK(st.r == 45.0);
    CHECK(st.i == 45.0);
    CHECK(st.e == 90.0);
    CHECK(st.d == 10.0);
    CHECK(st.s == 9810.0);
}

TEST_CASE("initial state: c_r = 1 puts nobody in I") {
    SeirdParams p;
    p.n_pop = 1e6;
    p.c_r = 1.0;
    p.c_e = 0.5;
    CHECK(initial_state_from_observations(123, 4, p).i == 0.0);
    CHECK(initial_state_from_observations(9999, 0, p).i == 0.0);
}

TEST_CASE("initial state: infeasible population") {
    SeirdParams p;
    p.n_pop = 100;
    p.c_e = 1.0;
    CHECK_THROWS_AS(initial_state_from_observations(90, 0, p), infeasible_population_error);
}

TEST_CASE("integrate: zero dynamics stays constant") {
    SeirdParams p;
    p.n_pop = 1000;
    const SeirdState init{900, 50, 30, 15, 5};
    const Trajectory traj = integrate(p, init, 20, 10);
    REQUIRE(traj.states.size() == 21);
    for (const SeirdState& st : traj.states) CHECK(max_norm_diff(st, init) == 0.0);
}

TEST_CASE("integrate: exponential decay oracle") {
    SeirdParams p;
    p.mu = 0.3;
    p.n_pop = 1000;
    SeirdState init{0, 0, 100, 0, 0};
    init.s = p.n_pop - init.sum();
    const Trajectory traj = integrate(p, init, 10, 10);
    const double exact = 100.0 * std::exp(-p.mu * 10.0);
    CHECK(std::abs(traj.states[10].i - exact) / exact < 1e-6);
}

TEST_CASE("integrate: fourth-order convergence against fine Euler") {
    const SeirdParams p{0.6, 0.25, 0.2, 0.1, 0.01, 1e6, 1.5, 0.4};
    const SeirdState init = initial_state_from_observations(100, 1, p);
    const SeirdState ref = euler_reference(p, init, 10.0, 1e-6);

    const double e1 = max_norm_diff(integrate(p, init, 10, 1).states[10], ref);
    const double e2 = max_norm_diff(integrate(p, init, 10, 2).states[10], ref);
    const double e3 = max_norm_diff(integrate(p, init, 10, 4).states[10], ref);
    // Slope over three step sizes; one halving should shrink the error ~16x.
    const double order = std::log2(e1 / e3) / 2.0;
    CHECK(order > 3.5);
    CHECK(order < 4.5);
    CHECK(e1 / e2 > 10.0);
    CHECK(e1 / e2 < 25.0);
}

TEST_CASE("integrate: conservation at every daily sample") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const SeirdParams p = random_params(rng);
        const SeirdState init = initial_state_from_observations(p.n_pop * 1e-4, 0, p);
        const Trajectory traj = integrate(p, init, 50, 10);
        for (const SeirdState& st : traj.states)
            CHECK(std::abs(st.sum() - p.n_pop) / p.n_pop < 1e-9);
    }
}

TEST_CASE("integrate: bit-identical on identical inputs") {
    std::mt19937_64 rng(3);
    const SeirdParams p = random_params(rng);
    const SeirdState init = initial_state_from_observations(p.n_pop * 1e-4, 0, p);
    const Trajectory a = integrate(p, init, 30, 10);
    const Trajectory b = integrate(p, init, 30, 10);
    for (std::size_t k = 0; k < a.states.size(); ++k)
        CHECK(max_norm_diff(a.states[k], b.states[k]) == 0.0);
}

TEST_CASE("integrate: argument validation") {
    SeirdParams p;
    p.n_pop = 1000;
    CHECK_THROWS_AS(integrate(p, {1000, 0, 0, 0, 0}, 0, 10), invalid_state_error);
    CHECK_THROWS_AS(integrate(p, {1000, 0, 0, 0, 0}, 5, 0), invalid_state_error);
}

TEST_CASE("observables: constant state maps through") {
    SeirdParams p;
    p.n_pop = 10000;
    const SeirdState init{9900, 0, 45, 45, 10};
    const Observables obs = observables(integrate(p, init, 3, 10));
    for (double c : obs.cum_cases) CHECK(c == 100.0);
    for (double d : obs.cum_deaths) CHECK(d == 10.0);
}

TEST_CASE("observables: deaths strictly increase while I > 0") {
    SeirdParams p{0.4, 0.1, 0.2, 0.1, 0.02, 1e5, 0.0, 0.0};
    const SeirdState init = initial_state_from_observations(50, 0, p);
    const Observables obs = observables(integrate(p, init, 30, 10));
    for (std::size_t t = 1; t < obs.cum_deaths.size(); ++t)
        CHECK(obs.cum_deaths[t] > obs.cum_deaths[t - 1]);
}

TEST_CASE("observables: internal consistency with the trajectory") {
    SeirdParams p{0.5, 0.0, 0.2, 0.1, 0.01, 1000.0, 0.0, 0.0};
    const Trajectory traj = integrate(p, {999, 0, 1, 0, 0}, 1, 10);
    const Observables obs = observables(traj);
    const SeirdState& st = traj.states[1];
    CHECK(obs.cum_cases[1] == st.i + st.r + st.d);
    CHECK(obs.cum_deaths[1] == st.d);
}

TEST_CASE("observables: monotone for non-negative parameters") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 20; ++trial) {
        const SeirdParams p = random_params(rng);
        const SeirdState init = initial_state_from_observations(p.n_pop * 1e-4, 0, p);
        const Observables obs = observables(integrate(p, init, 40, 10));
        for (std::size_t t = 1; t < obs.cum_cases.size(); ++t) {
            CHECK(obs.cum_cases[t] >= obs.cum_cases[t - 1] * (1.0 - 1e-9));
            CHECK(obs.cum_deaths[t] >= obs.cum_deaths[t - 1] * (1.0 - 1e-9));
        }
    }
}
