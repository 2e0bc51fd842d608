#ifndef EPIWIN_SEIRD_HPP
#define EPIWIN_SEIRD_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "epiwin/errors.hpp"

namespace epiwin {

// SEIRD compartments with pre-symptomatic transmission: exposed individuals
// infect at rate beta_e, infectious ones at beta_i. All counts are
// real-valued.
struct SeirdState {
    double s = 0.0;
    double e = 0.0;
    double i = 0.0;
    double r = 0.0;
    double d = 0.0;

    double sum() const { return s + e + i + r + d; }

    bool finite() const {
        return std::isfinite(s) && std::isfinite(e) && std::isfinite(i) &&
               std::isfinite(r) && std::isfinite(d);
    }
};

struct SeirdParams {
    double beta_i = 0.0;  // infection rate from I [1/day]
    double beta_e = 0.0;  // infection rate from E [1/day]
    double alpha = 0.0;   // inverse incubation period [1/day]
    double gamma = 0.0;   // recovery rate [1/day]
    double mu = 0.0;      // death rate [1/day]
    double n_pop = 1.0;   // total population
    double c_e = 0.0;     // E0 = c_e * (C0 - D0)
    double c_r = 0.0;     // R0 = c_r * (C0 - D0)

    static constexpr std::size_t n_params = 8;

    std::array<double, n_params> as_array() const {
        return {beta_i, beta_e, alpha, gamma, mu, n_pop, c_e, c_r};
    }

    static SeirdParams from_array(const std::array<double, n_params>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
    }

    static const std::array<const char*, n_params>& names() {
        static const std::array<const char*, n_params> n = {
            "beta_i", "beta_e", "alpha", "gamma", "mu", "n_pop", "c_e", "c_r"};
        return n;
    }

    bool valid() const {
        return beta_i >= 0 && beta_e >= 0 && alpha >= 0 && gamma >= 0 &&
               mu >= 0 && n_pop > 0 && c_e >= 0 && c_r >= 0 && c_r <= 1;
    }
};

// Daily samples of the integrated system; times[k] = k days from the start.
struct Trajectory {
    std::vector<double> times;
    std::vector<SeirdState> states;
};

// Model-side view of the two data channels the fit targets.
struct Observables {
    std::vector<double> cum_cases;
    std::vector<double> cum_deaths;
};

// Right-hand side of the SEIRD system. The five rates sum to zero: every
// flow leaves one compartment and enters another.
inline SeirdState seird_derivatives(const SeirdState& state, const SeirdParams& params) {
    if (!state.finite()) throw invalid_state_error("non-finite state in seird_derivatives");
    const double infection = params.beta_i * state.s * state.i / params.n_pop +
                             params.beta_e * state.s * state.e / params.n_pop;
    const double incubation = params.alpha * state.e;
    const double recovery = params.gamma * state.i;
    const double death = params.mu * state.i;
    return {-infection, infection - incubation, incubation - recovery - death,
            recovery, death};
}

// Builds the window-start state from the observed cumulative counts, splitting
// C0 - D0 between R, I and E via c_r and c_e. S absorbs the remainder so the
// population constraint holds exactly.
inline SeirdState initial_state_from_observations(double c0, double d0,
                                                  const SeirdParams& params) {
    const double active = c0 - d0;
    SeirdState st;
    st.r = params.c_r * active;
    st.i = (1.0 - params.c_r) * active;
    st.e = params.c_e * active;
    st.d = d0;
    st.s = params.n_pop - st.e - st.i - st.r - st.d;
    if (st.s <= 0.0) {
        throw infeasible_population_error(
            "population " + std::to_string(params.n_pop) +
            " too small for observed counts C0=" + std::to_string(c0));
    }
    return st;
}

namespace detail {

inline SeirdState axpy(const SeirdState& a, double h, const SeirdState& b) {
    return {a.s + h * b.s, a.e + h * b.e, a.i + h * b.i, a.r + h * b.r, a.d + h * b.d};
}

// Negative compartments from roundoff are clamped to zero with the deficit
// moved into S, so conservation is untouched. Anything below -1e-6 * N is a
// genuine blow-up and rejected.
inline void clamp_state(SeirdState& st, double n_pop, long step) {
    const double hard = -1e-6 * n_pop;
    for (double* c : {&st.e, &st.i, &st.r, &st.d, &st.s}) {
        if (*c < 0.0) {
            if (*c < hard) throw divergence_error("compartment below tolerance", step);
            if (c != &st.s) st.s += *c;
            *c = 0.0;
        }
    }
}

}  // namespace detail

// Classic fixed-step RK4, sampled at integer days 0..horizon.
inline Trajectory integrate(const SeirdParams& params, const SeirdState& init,
                            int horizon, int steps_per_day = 10) {
    if (horizon < 1) throw invalid_state_error("horizon must be >= 1");
    if (steps_per_day < 1) throw invalid_state_error("steps_per_day must be >= 1");

    const double h = 1.0 / steps_per_day;
    Trajectory traj;
    traj.times.reserve(horizon + 1);
    traj.states.reserve(horizon + 1);
    traj.times.push_back(0.0);
    traj.states.push_back(init);

    SeirdState st = init;
    long step = 0;
    for (int day = 1; day <= horizon; ++day) {
        for (int k = 0; k < steps_per_day; ++k, ++step) {
            const SeirdState k1 = seird_derivatives(st, params);
            const SeirdState k2 = seird_derivatives(detail::axpy(st, 0.5 * h, k1), params);
            const SeirdState k3 = seird_derivatives(detail::axpy(st, 0.5 * h, k2), params);
            const SeirdState k4 = seird_derivatives(detail::axpy(st, h, k3), params);
            st.s += h / 6.0 * (k1.s + 2 * k2.s + 2 * k3.s + k4.s);
            st.e += h / 6.0 * (k1.e + 2 * k2.e + 2 * k3.e + k4.e);
            st.i += h / 6.0 * (k1.i + 2 * k2.i + 2 * k3.i + k4.i);
            st.r += h / 6.0 * (k1.r + 2 * k2.r + 2 * k3.r + k4.r);
            st.d += h / 6.0 * (k1.d + 2 * k2.d + 2 * k3.d + k4.d);
            if (!st.finite()) throw divergence_error("non-finite state", step);
            detail::clamp_state(st, params.n_pop, step);
        }
        traj.times.push_back(static_cast<double>(day));
        traj.states.push_back(st);
    }
    return traj;
}

// Cumulative deaths are D directly; cumulative confirmed cases are mapped to
// I + R + D, everyone who has left the exposed stage.
inline Observables observables(const Trajectory& traj) {
    Observables obs;
    obs.cum_cases.reserve(traj.states.size());
    obs.cum_deaths.reserve(traj.states.size());
    for (const SeirdState& st : traj.states) {
        obs.cum_cases.push_back(st.i + st.r + st.d);
        obs.cum_deaths.push_back(st.d);
    }
    return obs;
}

}  // namespace epiwin

#endif
