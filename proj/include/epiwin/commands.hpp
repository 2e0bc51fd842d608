#ifndef EPIWIN_COMMANDS_HPP
#define EPIWIN_COMMANDS_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "epiwin/data_io.hpp"
#include "epiwin/pipeline.hpp"
#include "epiwin/report_io.hpp"

namespace epiwin {

inline ParamBounds default_bounds(double n_pop_lo, double n_pop_hi) {
    ParamBounds b;
    b[0] = {0.0, 2.0};         // beta_i
    b[1] = {0.0, 2.0};         // beta_e
    b[2] = {1.0 / 14.0, 1.0};  // alpha
    b[3] = {1.0 / 30.0, 1.0};  // gamma
    b[4] = {0.0, 0.1};         // mu
    b[5] = {n_pop_lo, n_pop_hi};
    b[6] = {0.0, 5.0};         // c_e
    b[7] = {0.0, 1.0};         // c_r
    return b;
}

struct RunConfig {
    std::string input;
    std::string region;
    std::string out_dir = "out";
    PriorMode mode = PriorMode::past;
    int replicates = 1;
    std::uint64_t seed = 0;
    WindowConfig wconfig;
    AbcConfig aconfig;
    PipelineOptions options;
    CsvColumns columns;
    double pop_cap = 0.0;        // upper bound on n_pop; 0 = 100x last cum cases
    double n_pop_floor = -1.0;   // lower bound on n_pop; <0 = last cum cases
    bool quiet = false;

    ParamBounds bounds_for(const EpidemicSeries& series) const {
        const double last = series.cum_cases.back();
        const double lo = n_pop_floor >= 0.0 ? n_pop_floor : std::max(last, 1.0);
        const double hi = pop_cap > 0.0 ? pop_cap : 100.0 * std::max(last, 1.0);
        if (hi <= lo) throw invalid_state_error("population cap below its floor");
        return default_bounds(lo, hi);
    }
};

namespace detail {

inline void log_window(const WindowRecord& rec, PriorMode mode, int replicate, bool quiet) {
    if (quiet) return;
    std::cerr << "[" << to_string(mode) << " r" << replicate << "] window " << rec.window.index
              << " size " << rec.window.size << " gens "
              << rec.posterior.tolerance_schedule.size() << " tol "
              << (rec.posterior.tolerance_schedule.empty()
                      ? 0.0
                      : rec.posterior.tolerance_schedule.back())
              << " eps_fit " << rec.eps_fit << (rec.stalled ? " [stalled]" : "") << "\n";
}

}  // namespace detail

// --- fit ---

struct FitResult {
    std::vector<RunReport> reports;  // one per replicate
    std::vector<std::string> manifest;
};

// Runs fit_sequential once per replicate (replicate r uses seed + r), writes
// one report directory per replicate plus an aggregate eps summary.
inline FitResult run_fit(const RunConfig& config) {
    const EpidemicSeries series = load_series(config.input, config.region, config.columns);
    const ParamBounds bounds = config.bounds_for(series);
    const std::filesystem::path out(config.out_dir);
    std::filesystem::create_directories(out);

    FitResult result;
    for (int r = 0; r < config.replicates; ++r) {
        RunReport report = fit_sequential(
            series, config.wconfig, bounds, config.aconfig, config.mode, config.seed + r,
            config.options,
            [&](const WindowRecord& rec) { detail::log_window(rec, config.mode, r, config.quiet); });
        auto files = write_run_report(report, out / ("replicate_" + std::to_string(r)));
        result.manifest.insert(result.manifest.end(), files.begin(), files.end());
        result.reports.push_back(std::move(report));
    }

    // Aggregate across replicates by window index (mean and std of eps).
    std::size_t n_windows = 0;
    for (const RunReport& rep : result.reports)
        n_windows = std::max(n_windows, rep.records.size());
    auto agg_path = out / "aggregate.csv";
    auto agg = detail::open_out(agg_path);
    agg << "window,n,eps_fit_mean,eps_fit_std,eps_pred_mean,eps_pred_std,size_mean\n";
    for (std::size_t w = 0; w < n_windows; ++w) {
        std::vector<double> ef, ep, sz;
        for (const RunReport& rep : result.reports) {
            if (w >= rep.records.size()) continue;
            const WindowRecord& rec = rep.records[w];
            if (std::isfinite(rec.eps_fit)) ef.push_back(rec.eps_fit);
            if (rec.eps_pred_available && std::isfinite(rec.eps_pred)) ep.push_back(rec.eps_pred);
            sz.push_back(rec.window.size);
        }
        auto mean = [](const std::vector<double>& v) {
            double s = 0.0;
            for (double x : v) s += x;
            return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                             : s / static_cast<double>(v.size());
        };
        auto stddev = [&](const std::vector<double>& v) {
            if (v.size() < 2) return 0.0;
            const double m = mean(v);
            double s = 0.0;
            for (double x : v) s += (x - m) * (x - m);
            return std::sqrt(s / static_cast<double>(v.size() - 1));
        };
        agg << (w + 1) << ',' << ef.size() << ',' << fmt_double(mean(ef)) << ','
            << fmt_double(stddev(ef)) << ',' << fmt_double(mean(ep)) << ','
            << fmt_double(stddev(ep)) << ',' << fmt_double(mean(sz)) << '\n';
    }
    result.manifest.push_back(agg_path.string());
    return result;
}

// --- compare ---

struct CompareResult {
    std::vector<std::pair<RunReport, RunReport>> runs;  // (flat, past) per replicate
    double fraction_above_one_fit = 0.0;       // all comparable windows, pooled
    double fraction_above_one_fit_n3 = 0.0;    // windows with index >= 3
    double fraction_above_one_pred = 0.0;
    std::vector<std::string> manifest;
};

// Paired flat-vs-past study: replicate r runs both modes from seed + r, so
// window streams coincide and window 1 priors are identical.
inline CompareResult run_compare(const RunConfig& config) {
    const EpidemicSeries series = load_series(config.input, config.region, config.columns);
    const ParamBounds bounds = config.bounds_for(series);
    const std::filesystem::path out(config.out_dir);
    std::filesystem::create_directories(out);

    CompareResult result;
    std::vector<double> all_ratios, n3_ratios, pred_ratios;

    auto ratios_csv = detail::open_out(out / "ratios.csv");
    ratios_csv << "replicate,window,eps_flat,eps_past,ratio\n";
    auto hm_flat = detail::open_out(out / "heatmap_flat.csv");
    auto hm_past = detail::open_out(out / "heatmap_past.csv");
    for (auto* hm : {&hm_flat, &hm_past}) *hm << "replicate,window,day_offset,rel_err\n";

    for (int r = 0; r < config.replicates; ++r) {
        const std::uint64_t seed = config.seed + r;
        auto run_mode = [&](PriorMode mode) {
            return fit_sequential(series, config.wconfig, bounds, config.aconfig, mode, seed,
                                  config.options, [&](const WindowRecord& rec) {
                                      detail::log_window(rec, mode, r, config.quiet);
                                  });
        };
        RunReport flat = run_mode(PriorMode::flat);
        RunReport past = run_mode(PriorMode::past);
        const ModeComparison cmp = compare_modes(flat, past);

        for (std::size_t n = 0; n < flat.records.size(); ++n) {
            const double ef = flat.records[n].eps_fit;
            const double ep = past.records[n].eps_fit;
            if (!std::isfinite(ef) || !std::isfinite(ep) || ep <= 0.0) continue;
            const double ratio = ef / ep;
            ratios_csv << r << ',' << (n + 1) << ',' << fmt_double(ef) << ',' << fmt_double(ep)
                       << ',' << fmt_double(ratio) << '\n';
            all_ratios.push_back(ratio);
            if (flat.records[n].window.index >= 3) n3_ratios.push_back(ratio);
            if (flat.records[n].eps_pred_available && past.records[n].eps_pred_available &&
                past.records[n].eps_pred > 0.0)
                pred_ratios.push_back(flat.records[n].eps_pred / past.records[n].eps_pred);
        }
        auto dump_heatmap = [&](std::ofstream& outf, const std::vector<std::vector<double>>& m) {
            for (std::size_t n = 0; n < m.size(); ++n)
                for (std::size_t k = 0; k < m[n].size(); ++k) {
                    outf << r << ',' << (n + 1) << ',' << (k + 1) << ',';
                    if (std::isfinite(m[n][k])) outf << fmt_double(m[n][k]);
                    outf << '\n';
                }
        };
        dump_heatmap(hm_flat, cmp.heatmap_flat);
        dump_heatmap(hm_past, cmp.heatmap_past);

        auto files = write_run_report(flat, out / ("flat_" + std::to_string(r)));
        auto files2 = write_run_report(past, out / ("past_" + std::to_string(r)));
        result.manifest.insert(result.manifest.end(), files.begin(), files.end());
        result.manifest.insert(result.manifest.end(), files2.begin(), files2.end());
        result.runs.emplace_back(std::move(flat), std::move(past));
    }

    auto frac_above = [](const std::vector<double>& v) {
        if (v.empty()) return 0.0;
        std::size_t above = 0;
        for (double x : v)
            if (x > 1.0) ++above;
        return static_cast<double>(above) / static_cast<double>(v.size());
    };
    result.fraction_above_one_fit = frac_above(all_ratios);
    result.fraction_above_one_fit_n3 = frac_above(n3_ratios);
    result.fraction_above_one_pred = frac_above(pred_ratios);

    auto summary = detail::open_out(out / "summary.txt");
    summary << "replicates: " << config.replicates << "\n"
            << "fit ratio fraction above 1 (all windows): " << result.fraction_above_one_fit
            << " over " << all_ratios.size() << " windows\n"
            << "fit ratio fraction above 1 (windows >= 3): " << result.fraction_above_one_fit_n3
            << " over " << n3_ratios.size() << " windows\n"
            << "pred ratio fraction above 1: " << result.fraction_above_one_pred << " over "
            << pred_ratios.size() << " windows\n";
    result.manifest.push_back((out / "ratios.csv").string());
    result.manifest.push_back((out / "heatmap_flat.csv").string());
    result.manifest.push_back((out / "heatmap_past.csv").string());
    result.manifest.push_back((out / "summary.txt").string());
    return result;
}

// --- synth ---

struct Regime {
    SeirdParams params;
    int days = 0;
};

struct SynthScenario {
    std::string region = "synthetic";
    std::string start_date = "2020-03-01";
    double initial_cases = 0.0;
    double initial_deaths = 0.0;
    std::vector<Regime> regimes;
    double noise = 0.0;  // sigma of multiplicative log-normal noise
    std::uint64_t seed = 0;
    int steps_per_day = 10;
};

inline SynthScenario scenario_from_json(const nlohmann::json& j) {
    SynthScenario sc;
    sc.region = j.value("region", sc.region);
    sc.start_date = j.value("start_date", sc.start_date);
    sc.initial_cases = j.value("initial_cases", sc.initial_cases);
    sc.initial_deaths = j.value("initial_deaths", sc.initial_deaths);
    sc.noise = j.value("noise", sc.noise);
    sc.seed = j.value("seed", sc.seed);
    sc.steps_per_day = j.value("steps_per_day", sc.steps_per_day);
    for (const auto& jr : j.at("regimes")) {
        Regime reg;
        reg.days = jr.at("days").get<int>();
        std::array<double, SeirdParams::n_params> a;
        const auto& names = SeirdParams::names();
        for (std::size_t k = 0; k < names.size(); ++k) a[k] = jr.at(names[k]).get<double>();
        reg.params = SeirdParams::from_array(a);
        sc.regimes.push_back(reg);
    }
    return sc;
}

// Integrates the model piecewise over the regime schedule (state continuous
// across switches) and emits the observables as an input-format CSV.
inline EpidemicSeries synth_series(const SynthScenario& sc) {
    if (sc.regimes.empty()) throw invalid_state_error("synth: need at least one regime");
    for (const Regime& reg : sc.regimes) {
        if (reg.days < 1) throw invalid_state_error("synth: regime duration must be >= 1");
        if (!reg.params.valid()) throw invalid_state_error("synth: invalid regime parameters");
    }

    EpidemicSeries series;
    series.region = sc.region;
    series.start_day = parse_iso_date(sc.start_date);

    SeirdState state = initial_state_from_observations(sc.initial_cases, sc.initial_deaths,
                                                       sc.regimes.front().params);
    {
        const Observables first = observables(Trajectory{{0.0}, {state}});
        series.cum_cases.push_back(first.cum_cases[0]);
        series.cum_deaths.push_back(first.cum_deaths[0]);
    }
    for (const Regime& reg : sc.regimes) {
        // The population constraint follows the first regime; later regimes
        // must keep the same n_pop for the state to remain consistent.
        const Trajectory traj = integrate(reg.params, state, reg.days, sc.steps_per_day);
        const Observables obs = observables(traj);
        for (std::size_t t = 1; t < obs.cum_cases.size(); ++t) {
            series.cum_cases.push_back(obs.cum_cases[t]);
            series.cum_deaths.push_back(obs.cum_deaths[t]);
        }
        state = traj.states.back();
    }

    if (sc.noise > 0.0) {
        Rng rng = make_stream(sc.seed, 0xabcdULL);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int t = 1; t < series.size(); ++t) {
            series.cum_cases[t] *= std::exp(sc.noise * gauss(rng));
            series.cum_deaths[t] *= std::exp(sc.noise * gauss(rng));
        }
    }
    return series;
}

inline EpidemicSeries run_synth(const SynthScenario& sc, const std::string& out_path,
                                const CsvColumns& columns = {}) {
    const EpidemicSeries series = synth_series(sc);
    write_series_csv(series, out_path, columns);
    return series;
}

}  // namespace epiwin

#endif
