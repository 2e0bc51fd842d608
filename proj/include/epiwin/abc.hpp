#ifndef EPIWIN_ABC_HPP
#define EPIWIN_ABC_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <thread>
#include <vector>

#include "epiwin/errors.hpp"
#include "epiwin/metrics.hpp"
#include "epiwin/prior.hpp"
#include "epiwin/rng.hpp"
#include "epiwin/seird.hpp"
#include "epiwin/weighted.hpp"

namespace epiwin {

struct AbcConfig {
    int n_particles = 1000;
    int n_generations = 6;
    double quantile_for_next_tolerance = 0.5;
    // Every candidate draw (including out-of-support and infeasible-population
    // proposals) counts against this budget.
    int max_simulations_per_generation = 200000;
    int gen0_batch_factor = 5;  // generation 0 draws n_particles * factor candidates
    int steps_per_day = 10;
    int n_workers = 0;  // 0 = hardware concurrency
    std::uint64_t rng_seed = 0;

    bool valid() const {
        return n_particles >= 2 && n_generations >= 1 &&
               quantile_for_next_tolerance > 0.0 && quantile_for_next_tolerance < 1.0 &&
               max_simulations_per_generation >= n_particles && gen0_batch_factor >= 1 &&
               steps_per_day >= 1;
    }
};

struct WeightedPosterior {
    std::vector<SeirdParams> particles;
    std::vector<double> weights;   // normalized
    std::vector<double> distances;
    std::vector<double> tolerance_schedule;  // one entry per completed generation
    std::vector<long> simulations_per_generation;

    std::size_t size() const { return particles.size(); }

    // Column view of one parameter across particles.
    std::vector<double> column(std::size_t k) const {
        std::vector<double> col(particles.size());
        for (std::size_t j = 0; j < particles.size(); ++j) col[j] = particles[j].as_array()[k];
        return col;
    }

    std::size_t min_distance_index() const {
        return static_cast<std::size_t>(
            std::min_element(distances.begin(), distances.end()) - distances.begin());
    }

    SeirdParams weighted_median_params() const {
        std::array<double, SeirdParams::n_params> a;
        for (std::size_t k = 0; k < a.size(); ++k)
            a[k] = weighted_median(column(k), weights);
        return SeirdParams::from_array(a);
    }
};

// Distance between a simulated trajectory and the window data: the sum of the
// per-channel NRMSDs, the same yardstick used for goodness-of-fit.
inline double abc_distance(const Observables& sim, std::span<const double> cases,
                           std::span<const double> deaths) {
    std::vector<ChannelNrmsd> comps = {
        nrmsd_component(cases, std::span<const double>(sim.cum_cases)),
        nrmsd_component(deaths, std::span<const double>(sim.cum_deaths))};
    return nrmsd_total(comps);
}

namespace detail {

struct Candidate {
    SeirdParams theta;
    double distance = 0.0;
    bool accepted_sim = false;  // simulation ran and produced a finite distance
};

// Simulates one parameter draw over the window and scores it. Infeasible or
// diverging draws come back with accepted_sim = false.
inline Candidate simulate_candidate(const SeirdParams& theta, std::span<const double> cases,
                                    std::span<const double> deaths, int steps_per_day) {
    Candidate c;
    c.theta = theta;
    try {
        const SeirdState init = initial_state_from_observations(cases[0], deaths[0], theta);
        const Trajectory traj =
            integrate(theta, init, static_cast<int>(cases.size()) - 1, steps_per_day);
        const double dist = abc_distance(observables(traj), cases, deaths);
        if (std::isfinite(dist)) {
            c.distance = dist;
            c.accepted_sim = true;
        }
    } catch (const infeasible_population_error&) {
    } catch (const divergence_error&) {
    }
    return c;
}

template <typename Fn>
void parallel_for(long n, int n_workers, Fn&& fn) {
    int workers = n_workers > 0 ? n_workers
                                : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    if (workers == 1 || n < 2) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (long i = w; i < n; i += workers) fn(i);
        });
    }
    for (std::thread& t : pool) t.join();
}

}  // namespace detail

// ABC-SMC over one time-window. Generation 0 keeps the n_particles best draws
// from a prior batch; each later generation lowers the tolerance to a quantile
// of the previous accepted distances, resamples, perturbs with a Gaussian
// kernel (variance twice the weighted sample variance per parameter) and
// reweights by prior density over the mixture kernel density.
//
// Candidate streams are derived from (seed, generation, candidate index), so
// the result is identical for any worker count.
inline WeightedPosterior abc_smc(const Prior& prior, std::span<const double> cases,
                                 std::span<const double> deaths, const AbcConfig& config) {
    if (!config.valid()) throw invalid_state_error("abc_smc: invalid config");
    if (cases.size() != deaths.size() || cases.size() < 2)
        throw invalid_state_error("abc_smc: window data too short");

    const std::size_t n = static_cast<std::size_t>(config.n_particles);
    const ParamBounds& support = prior.support();

    WeightedPosterior post;

    // Generation 0: rank truncation of a prior batch.
    {
        const long batch = std::min<long>(
            static_cast<long>(n) * config.gen0_batch_factor,
            config.max_simulations_per_generation);
        std::vector<detail::Candidate> cands(batch);
        detail::parallel_for(batch, config.n_workers, [&](long c) {
            Rng rng = make_stream(config.rng_seed, 0, static_cast<std::uint64_t>(c));
            cands[c] = detail::simulate_candidate(prior.sample(rng), cases, deaths,
                                                  config.steps_per_day);
        });
        std::vector<std::size_t> ok;
        for (std::size_t c = 0; c < cands.size(); ++c)
            if (cands[c].accepted_sim) ok.push_back(c);
        if (ok.size() < n)
            throw stalled_inference_error("abc_smc: generation 0 produced too few valid simulations",
                                          0.0);
        std::nth_element(ok.begin(), ok.begin() + n - 1, ok.end(),
                         [&](std::size_t a, std::size_t b) {
                             return cands[a].distance < cands[b].distance;
                         });
        ok.resize(n);
        std::sort(ok.begin(), ok.end());  // keep candidate order deterministic
        for (std::size_t c : ok) {
            post.particles.push_back(cands[c].theta);
            post.distances.push_back(cands[c].distance);
        }
        post.weights.assign(n, 1.0 / static_cast<double>(n));
        post.tolerance_schedule.push_back(
            *std::max_element(post.distances.begin(), post.distances.end()));
        post.simulations_per_generation.push_back(batch);
    }

    for (int gen = 1; gen < config.n_generations; ++gen) {
        const double eps_t =
            quantile(post.distances, config.quantile_for_next_tolerance);
        if (!(eps_t < post.tolerance_schedule.back())) break;  // schedule must shrink

        // Kernel scale per parameter: sqrt(2 * weighted variance).
        std::array<double, SeirdParams::n_params> sigma;
        for (std::size_t k = 0; k < sigma.size(); ++k)
            sigma[k] = std::sqrt(2.0 * weighted_variance(post.column(k), post.weights));

        const std::vector<SeirdParams> prev_particles = post.particles;
        const std::vector<double> prev_weights = post.weights;

        std::vector<SeirdParams> next_particles;
        std::vector<double> next_distances;
        long sims = 0;
        const long block = std::max<long>(256, config.n_particles);
        bool budget_exhausted = false;

        while (next_particles.size() < n && !budget_exhausted) {
            const long todo =
                std::min<long>(block, config.max_simulations_per_generation - sims);
            if (todo <= 0) {
                budget_exhausted = true;
                break;
            }
            std::vector<detail::Candidate> cands(todo);
            detail::parallel_for(todo, config.n_workers, [&](long c) {
                Rng rng = make_stream(config.rng_seed, static_cast<std::uint64_t>(gen),
                                      static_cast<std::uint64_t>(sims + c));
                std::discrete_distribution<std::size_t> pick(prev_weights.begin(),
                                                             prev_weights.end());
                std::normal_distribution<double> gauss(0.0, 1.0);
                const auto mu = prev_particles[pick(rng)].as_array();
                std::array<double, SeirdParams::n_params> a;
                bool inside = true;
                for (std::size_t k = 0; k < a.size(); ++k) {
                    a[k] = sigma[k] > 0.0 ? mu[k] + sigma[k] * gauss(rng) : mu[k];
                    if (!support[k].contains(a[k])) inside = false;
                }
                if (inside) {
                    cands[c] = detail::simulate_candidate(SeirdParams::from_array(a), cases,
                                                          deaths, config.steps_per_day);
                } else {
                    cands[c].accepted_sim = false;
                }
            });
            sims += todo;
            for (const detail::Candidate& cand : cands) {
                if (cand.accepted_sim && cand.distance <= eps_t &&
                    next_particles.size() < n) {
                    next_particles.push_back(cand.theta);
                    next_distances.push_back(cand.distance);
                }
            }
        }

        if (next_particles.size() < n) {
            if (next_particles.empty())
                throw stalled_inference_error("abc_smc: simulation budget exhausted with no acceptances",
                                              eps_t);
            break;  // partial generation: keep the last complete one
        }

        // Importance weights: prior density over the resampling-kernel mixture.
        std::vector<double> next_weights(n);
        detail::parallel_for(static_cast<long>(n), config.n_workers, [&](long j) {
            const auto x = next_particles[j].as_array();
            double mix = 0.0;
            for (std::size_t p = 0; p < prev_particles.size(); ++p) {
                const auto mu = prev_particles[p].as_array();
                double kern = prev_weights[p];
                for (std::size_t k = 0; k < x.size() && kern > 0.0; ++k) {
                    if (sigma[k] > 0.0)
                        kern *= detail::normal_pdf((x[k] - mu[k]) / sigma[k]) / sigma[k];
                }
                mix += kern;
            }
            next_weights[j] = mix > 0.0 ? prior.density(next_particles[j]) / mix : 0.0;
        });
        double wsum = std::accumulate(next_weights.begin(), next_weights.end(), 0.0);
        if (wsum <= 0.0)
            throw stalled_inference_error("abc_smc: all importance weights vanished", eps_t);
        for (double& w : next_weights) w /= wsum;

        post.particles = std::move(next_particles);
        post.distances = std::move(next_distances);
        post.weights = std::move(next_weights);
        post.tolerance_schedule.push_back(eps_t);
        post.simulations_per_generation.push_back(sims);
    }

    return post;
}

// Turns a weighted posterior into the next window's prior: a Gaussian kernel
// mixture on the particles, bandwidth from the weighted Silverman rule scaled
// by `inflation`, truncated to the original uniform bounds.
inline Prior posterior_to_prior(const WeightedPosterior& posterior, const ParamBounds& bounds,
                                double inflation = 1.5) {
    if (posterior.particles.empty())
        throw degenerate_prior_error("posterior_to_prior: empty posterior");
    const double n_eff = effective_sample_size(posterior.weights);
    std::array<double, SeirdParams::n_params> h;
    for (std::size_t k = 0; k < h.size(); ++k) {
        const double sd =
            std::sqrt(weighted_variance(posterior.column(k), posterior.weights));
        h[k] = inflation * 1.06 * sd * std::pow(std::max(n_eff, 1.0), -0.2);
    }
    return Prior::mixture(posterior.particles, posterior.weights, h, bounds);
}

}  // namespace epiwin

#endif
