#ifndef EPIWIN_PIPELINE_HPP
#define EPIWIN_PIPELINE_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epiwin/abc.hpp"
#include "epiwin/data_io.hpp"
#include "epiwin/errors.hpp"
#include "epiwin/metrics.hpp"
#include "epiwin/rng.hpp"
#include "epiwin/windowing.hpp"

namespace epiwin {

enum class PriorMode { flat, past };

inline const char* to_string(PriorMode m) { return m == PriorMode::flat ? "flat" : "past"; }

struct PipelineOptions {
    bool eps_fit_uses_best_particle = false;  // default: weighted-median summary
    double prior_inflation = 1.5;             // posterior-to-prior bandwidth scale
    double band_lo = 0.05;
    double band_hi = 0.95;
};

struct ForecastBand {
    int origin = 0;   // day index of the last fitted day
    int horizon = 0;  // entries cover days origin+1 .. origin+horizon
    std::vector<double> point_cases, lower_cases, upper_cases;
    std::vector<double> point_deaths, lower_deaths, upper_deaths;
    int excluded_particles = 0;  // infeasible at the forecast origin
};

struct ParamSummary {
    double median = 0.0;
    double lo90 = 0.0;  // central 90% interval
    double hi90 = 0.0;
};

struct WindowRecord {
    TimeWindow window;
    WeightedPosterior posterior;
    std::array<ParamSummary, SeirdParams::n_params> posterior_summary;
    double eps_fit = std::numeric_limits<double>::quiet_NaN();
    double eps_pred = std::numeric_limits<double>::quiet_NaN();
    bool eps_pred_available = false;
    bool stalled = false;
    ForecastBand forecast;
    std::vector<std::optional<double>> rel_err_by_day;  // daily cases channel
};

struct RunReport {
    PriorMode mode = PriorMode::flat;
    WindowConfig wconfig;
    ParamBounds bounds;
    AbcConfig aconfig;
    PipelineOptions options;
    std::uint64_t seed = 0;
    std::string region;
    std::int64_t series_start_day = 0;  // epoch day of the series' first sample
    std::vector<WindowRecord> records;
    std::vector<int> window_size_trace;
};

namespace detail {

inline std::span<const double> slice(const std::vector<double>& v, int start, int len) {
    return std::span<const double>(v).subspan(static_cast<std::size_t>(start),
                                              static_cast<std::size_t>(len));
}

// NRMSD of the trajectory generated by `theta` against the window data.
inline double eps_for_params(const SeirdParams& theta, std::span<const double> cases,
                             std::span<const double> deaths, int steps_per_day) {
    const SeirdState init = initial_state_from_observations(cases[0], deaths[0], theta);
    const Trajectory traj =
        integrate(theta, init, static_cast<int>(cases.size()) - 1, steps_per_day);
    return abc_distance(observables(traj), cases, deaths);
}

}  // namespace detail

// Point forecast from the minimum-distance particle, band from the weighted
// per-day percentiles over all particles' trajectories. Each particle's
// trajectory is the continuation of its fitted simulation: it restarts from
// the window-start observations (where c_e and c_r describe the state split)
// and runs through the window before entering the horizon. Particles whose
// population is infeasible at the window start are dropped from the band.
inline ForecastBand forecast(const WeightedPosterior& posterior, double c_start,
                             double d_start, int fit_days, int origin_day, int horizon,
                             int steps_per_day = 10, double band_lo = 0.05,
                             double band_hi = 0.95) {
    if (horizon < 1) throw invalid_state_error("forecast: horizon must be >= 1");
    if (fit_days < 1) throw invalid_state_error("forecast: fit_days must be >= 1");
    ForecastBand band;
    band.origin = origin_day;
    band.horizon = horizon;

    const int lead = fit_days - 1;  // days between the window start and the origin
    std::vector<std::vector<double>> part_cases, part_deaths;  // per particle
    std::vector<double> part_weights;
    std::vector<double> best_cases, best_deaths;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < posterior.size(); ++j) {
        try {
            const SeirdState init =
                initial_state_from_observations(c_start, d_start, posterior.particles[j]);
            const Trajectory traj =
                integrate(posterior.particles[j], init, lead + horizon, steps_per_day);
            const Observables obs = observables(traj);
            std::vector<double> cc(obs.cum_cases.begin() + 1 + lead, obs.cum_cases.end());
            std::vector<double> dd(obs.cum_deaths.begin() + 1 + lead, obs.cum_deaths.end());
            part_cases.push_back(cc);
            part_deaths.push_back(dd);
            part_weights.push_back(posterior.weights[j]);
            if (posterior.distances[j] < best_dist) {
                best_dist = posterior.distances[j];
                best_cases = std::move(cc);
                best_deaths = std::move(dd);
            }
        } catch (const infeasible_population_error&) {
            ++band.excluded_particles;
        } catch (const divergence_error&) {
            ++band.excluded_particles;
        }
    }
    if (part_cases.empty())
        throw infeasible_population_error("forecast: every particle infeasible at the window start");

    band.point_cases = best_cases;
    band.point_deaths = best_deaths;
    for (int day = 0; day < horizon; ++day) {
        std::vector<double> col_c(part_cases.size()), col_d(part_cases.size());
        for (std::size_t j = 0; j < part_cases.size(); ++j) {
            col_c[j] = part_cases[j][day];
            col_d[j] = part_deaths[j][day];
        }
        band.lower_cases.push_back(
            std::min(weighted_quantile(col_c, part_weights, band_lo), band.point_cases[day]));
        band.upper_cases.push_back(
            std::max(weighted_quantile(col_c, part_weights, band_hi), band.point_cases[day]));
        band.lower_deaths.push_back(
            std::min(weighted_quantile(col_d, part_weights, band_lo), band.point_deaths[day]));
        band.upper_deaths.push_back(
            std::max(weighted_quantile(col_d, part_weights, band_hi), band.point_deaths[day]));
    }
    return band;
}

// Fits the series window by window. In PAST mode each window's prior is the
// kernel-smoothed posterior of the previous window; in FLAT mode every window
// restarts from the uniform prior. Window seeds derive from (seed, index), so
// paired FLAT/PAST runs see identical streams per window.
inline RunReport fit_sequential(const EpidemicSeries& series, const WindowConfig& wconfig,
                                const ParamBounds& bounds, const AbcConfig& aconfig,
                                PriorMode mode, std::uint64_t seed,
                                const PipelineOptions& options = {},
                                const std::function<void(const WindowRecord&)>& on_window = {}) {
    if (!wconfig.valid()) throw invalid_state_error("fit_sequential: invalid window config");
    if (!bounds.valid()) throw invalid_state_error("fit_sequential: invalid bounds");
    if (series.size() < wconfig.s_initial)
        throw insufficient_data_error("fit_sequential: series shorter than the first window");

    RunReport report;
    report.mode = mode;
    report.wconfig = wconfig;
    report.bounds = bounds;
    report.aconfig = aconfig;
    report.options = options;
    report.seed = seed;
    report.region = series.region;
    report.series_start_day = series.start_day;

    const Prior flat = Prior::uniform(bounds);
    std::optional<WeightedPosterior> carried;  // last successful posterior (PAST mode)
    std::vector<double> eps_history;

    std::optional<TimeWindow> window = first_window(wconfig, series.size());
    while (window) {
        const TimeWindow w = *window;
        WindowRecord rec;
        rec.window = w;

        AbcConfig wa = aconfig;
        wa.rng_seed = derive_seed(seed, static_cast<std::uint64_t>(w.index));

        Prior prior = (mode == PriorMode::past && carried)
                          ? posterior_to_prior(*carried, bounds, options.prior_inflation)
                          : flat;

        const auto cases = detail::slice(series.cum_cases, w.start, w.size);
        const auto deaths = detail::slice(series.cum_deaths, w.start, w.size);

        try {
            rec.posterior = abc_smc(prior, cases, deaths, wa);
        } catch (const stalled_inference_error&) {
            rec.stalled = true;
            if (carried) rec.posterior = *carried;  // keep going with the previous posterior
        }

        if (!rec.posterior.particles.empty()) {
            for (std::size_t k = 0; k < SeirdParams::n_params; ++k) {
                const std::vector<double> col = rec.posterior.column(k);
                rec.posterior_summary[k] = {weighted_median(col, rec.posterior.weights),
                                            weighted_quantile(col, rec.posterior.weights, 0.05),
                                            weighted_quantile(col, rec.posterior.weights, 0.95)};
            }

            const SeirdParams fit_params =
                options.eps_fit_uses_best_particle
                    ? rec.posterior.particles[rec.posterior.min_distance_index()]
                    : rec.posterior.weighted_median_params();
            try {
                rec.eps_fit = detail::eps_for_params(fit_params, cases, deaths, wa.steps_per_day);
            } catch (const std::runtime_error&) {
                try {
                    rec.eps_fit = detail::eps_for_params(
                        rec.posterior.particles[rec.posterior.min_distance_index()], cases,
                        deaths, wa.steps_per_day);
                } catch (const std::runtime_error&) {
                    rec.stalled = true;
                }
            }

            const int origin = w.last_day();
            try {
                rec.forecast = forecast(rec.posterior, series.cum_cases[w.start],
                                        series.cum_deaths[w.start], w.size, origin,
                                        wconfig.horizon, wa.steps_per_day, options.band_lo,
                                        options.band_hi);
                if (origin + wconfig.horizon < series.size()) {
                    const auto fut_cases =
                        detail::slice(series.cum_cases, origin + 1, wconfig.horizon);
                    const auto fut_deaths =
                        detail::slice(series.cum_deaths, origin + 1, wconfig.horizon);
                    std::vector<ChannelNrmsd> comps = {
                        nrmsd_component(fut_cases, rec.forecast.point_cases),
                        nrmsd_component(fut_deaths, rec.forecast.point_deaths)};
                    rec.eps_pred = nrmsd_total(comps);
                    rec.eps_pred_available = true;

                    // Daily cases: first difference, day 1 against the origin.
                    std::vector<double> pred_daily(wconfig.horizon), data_daily(wconfig.horizon);
                    for (int k = 0; k < wconfig.horizon; ++k) {
                        const double prev_pred =
                            k == 0 ? series.cum_cases[origin] : rec.forecast.point_cases[k - 1];
                        const double prev_data =
                            k == 0 ? series.cum_cases[origin] : series.cum_cases[origin + k];
                        pred_daily[k] = rec.forecast.point_cases[k] - prev_pred;
                        data_daily[k] = series.cum_cases[origin + 1 + k] - prev_data;
                    }
                    rec.rel_err_by_day = relative_error_by_day(pred_daily, data_daily);
                }
            } catch (const infeasible_population_error&) {
                rec.stalled = true;
            }

            if (!rec.stalled && mode == PriorMode::past) carried = rec.posterior;
        }

        eps_history.push_back(rec.eps_fit);
        report.window_size_trace.push_back(w.size);
        if (on_window) on_window(rec);
        report.records.push_back(std::move(rec));

        // Window 2 keeps the first window's size; from window 3 on the size
        // follows the adaptive rule over the last two fit errors.
        int next_size = w.size;
        const std::size_t n = eps_history.size();
        if (n >= 2) {
            const double e1 = eps_history[n - 1];
            const double e2 = eps_history[n - 2];
            if (std::isnan(e1) && std::isnan(e2)) {
                next_size = w.size;  // two stalled windows in a row: keep the size
            } else {
                // A stalled window's missing eps counts as a worse fit; a
                // missing comparison baseline falls back to the tie branch.
                const double prev = std::isnan(e1) ? std::numeric_limits<double>::infinity() : e1;
                const double prev2 = std::isnan(e2) ? prev : e2;
                next_size = select_window_size(prev, prev2, w.size, wconfig);
            }
        }
        window = next_window(w, next_size, wconfig, series.size());
    }
    return report;
}

struct ModeComparison {
    RatioStats fit_ratios;
    RatioStats pred_ratios;
    bool pred_available = false;
    // windows x horizon matrices of per-day relative errors (NaN = undefined)
    std::vector<std::vector<double>> heatmap_flat;
    std::vector<std::vector<double>> heatmap_past;
};

namespace detail {

inline std::vector<std::vector<double>> heatmap_matrix(const RunReport& report) {
    std::vector<std::vector<double>> m;
    for (const WindowRecord& rec : report.records) {
        std::vector<double> row(report.wconfig.horizon,
                                std::numeric_limits<double>::quiet_NaN());
        for (std::size_t k = 0; k < rec.rel_err_by_day.size(); ++k)
            if (rec.rel_err_by_day[k]) row[k] = *rec.rel_err_by_day[k];
        m.push_back(std::move(row));
    }
    return m;
}

}  // namespace detail

// Flat-vs-past comparison over paired runs: per-window NRMSD ratios for fit
// and prediction plus both relative-error heatmaps.
inline ModeComparison compare_modes(const RunReport& flat, const RunReport& past) {
    if (flat.records.size() != past.records.size())
        throw incomparable_runs_error("compare_modes: different window counts");
    for (std::size_t n = 0; n < flat.records.size(); ++n) {
        if (flat.records[n].window.end() != past.records[n].window.end())
            throw incomparable_runs_error("compare_modes: window end days differ");
    }

    ModeComparison cmp;
    std::vector<double> fit_flat, fit_past, pred_flat, pred_past;
    for (std::size_t n = 0; n < flat.records.size(); ++n) {
        const WindowRecord& f = flat.records[n];
        const WindowRecord& p = past.records[n];
        if (std::isfinite(f.eps_fit) && std::isfinite(p.eps_fit)) {
            fit_flat.push_back(f.eps_fit);
            fit_past.push_back(p.eps_fit);
        }
        if (f.eps_pred_available && p.eps_pred_available && std::isfinite(f.eps_pred) &&
            std::isfinite(p.eps_pred)) {
            pred_flat.push_back(f.eps_pred);
            pred_past.push_back(p.eps_pred);
        }
    }
    if (fit_flat.empty()) throw incomparable_runs_error("compare_modes: no comparable windows");
    cmp.fit_ratios = ratio_stats(fit_flat, fit_past);
    if (!pred_flat.empty()) {
        cmp.pred_ratios = ratio_stats(pred_flat, pred_past);
        cmp.pred_available = true;
    }
    cmp.heatmap_flat = detail::heatmap_matrix(flat);
    cmp.heatmap_past = detail::heatmap_matrix(past);
    return cmp;
}

}  // namespace epiwin

#endif
