#ifndef EPIWIN_REPORT_IO_HPP
#define EPIWIN_REPORT_IO_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "epiwin/data_io.hpp"
#include "epiwin/pipeline.hpp"

namespace epiwin {

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw io_error("cannot write " + p.string());
    return out;
}

inline nlohmann::json bounds_json(const ParamBounds& bounds) {
    nlohmann::json j;
    const auto& names = SeirdParams::names();
    for (std::size_t k = 0; k < names.size(); ++k)
        j[names[k]] = {bounds[k].lo, bounds[k].hi};
    return j;
}

inline ParamBounds bounds_from_json(const nlohmann::json& j) {
    ParamBounds b;
    const auto& names = SeirdParams::names();
    for (std::size_t k = 0; k < names.size(); ++k) {
        b[k].lo = j.at(names[k])[0].get<double>();
        b[k].hi = j.at(names[k])[1].get<double>();
    }
    return b;
}

}  // namespace detail

// Writes one posterior as CSV: 8 parameter columns, weight, distance.
inline void write_posterior_csv(const WeightedPosterior& posterior,
                                const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    const auto& names = SeirdParams::names();
    for (std::size_t k = 0; k < names.size(); ++k) out << names[k] << ',';
    out << "weight,distance\n";
    for (std::size_t j = 0; j < posterior.size(); ++j) {
        for (double v : posterior.particles[j].as_array()) out << fmt_double(v) << ',';
        out << fmt_double(posterior.weights[j]) << ',' << fmt_double(posterior.distances[j])
            << '\n';
    }
}

// Writes the full per-run artifact set:
//   windows.csv       one row per window (index, start date, size, eps, flags)
//   posterior_<n>.csv particle rows (8 parameters, weight, distance)
//   forecasts.csv     per window/day/channel point and band bounds
//   heatmap.csv       per window/day relative daily-case error
//   run.json          config snapshot, seed, mode, summary
// Returns the list of written paths.
inline std::vector<std::string> write_run_report(const RunReport& report,
                                                 const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> manifest;

    {
        auto out = detail::open_out(out_dir / "windows.csv");
        out << "index,start_date,size,eps_fit,eps_pred,flags\n";
        for (const WindowRecord& rec : report.records) {
            out << rec.window.index << ','
                << iso_date(report.series_start_day + rec.window.start) << ','
                << rec.window.size << ',' << fmt_double(rec.eps_fit) << ','
                << (rec.eps_pred_available ? fmt_double(rec.eps_pred) : "") << ','
                << (rec.stalled ? "stalled" : "") << '\n';
        }
        manifest.push_back((out_dir / "windows.csv").string());
    }

    for (const WindowRecord& rec : report.records) {
        const std::string name = "posterior_" + std::to_string(rec.window.index) + ".csv";
        write_posterior_csv(rec.posterior, out_dir / name);
        manifest.push_back((out_dir / name).string());
    }

    {
        auto out = detail::open_out(out_dir / "forecasts.csv");
        out << "window,day_offset,channel,point,lower,upper\n";
        for (const WindowRecord& rec : report.records) {
            const ForecastBand& b = rec.forecast;
            for (int k = 0; k < b.horizon; ++k) {
                out << rec.window.index << ',' << (k + 1) << ",cases,"
                    << fmt_double(b.point_cases[k]) << ',' << fmt_double(b.lower_cases[k])
                    << ',' << fmt_double(b.upper_cases[k]) << '\n';
                out << rec.window.index << ',' << (k + 1) << ",deaths,"
                    << fmt_double(b.point_deaths[k]) << ',' << fmt_double(b.lower_deaths[k])
                    << ',' << fmt_double(b.upper_deaths[k]) << '\n';
            }
        }
        manifest.push_back((out_dir / "forecasts.csv").string());
    }

    {
        auto out = detail::open_out(out_dir / "heatmap.csv");
        out << "window,day_offset,rel_err\n";
        for (const WindowRecord& rec : report.records) {
            for (std::size_t k = 0; k < rec.rel_err_by_day.size(); ++k) {
                out << rec.window.index << ',' << (k + 1) << ',';
                if (rec.rel_err_by_day[k]) out << fmt_double(*rec.rel_err_by_day[k]);
                out << '\n';
            }
        }
        manifest.push_back((out_dir / "heatmap.csv").string());
    }

    {
        nlohmann::json j;
        j["mode"] = to_string(report.mode);
        j["region"] = report.region;
        j["seed"] = report.seed;
        j["series_start_date"] = iso_date(report.series_start_day);
        j["window_config"] = {{"s_initial", report.wconfig.s_initial},
                              {"s_min", report.wconfig.s_min},
                              {"s_max", report.wconfig.s_max},
                              {"shift", report.wconfig.shift},
                              {"horizon", report.wconfig.horizon}};
        j["bounds"] = detail::bounds_json(report.bounds);
        j["abc_config"] = {{"n_particles", report.aconfig.n_particles},
                           {"n_generations", report.aconfig.n_generations},
                           {"quantile_for_next_tolerance", report.aconfig.quantile_for_next_tolerance},
                           {"max_simulations_per_generation", report.aconfig.max_simulations_per_generation},
                           {"gen0_batch_factor", report.aconfig.gen0_batch_factor},
                           {"steps_per_day", report.aconfig.steps_per_day}};
        j["options"] = {{"eps_fit_uses_best_particle", report.options.eps_fit_uses_best_particle},
                        {"prior_inflation", report.options.prior_inflation},
                        {"band_lo", report.options.band_lo},
                        {"band_hi", report.options.band_hi}};
        j["window_size_trace"] = report.window_size_trace;
        std::vector<double> eps_fit, eps_pred;
        int stalled = 0;
        for (const WindowRecord& rec : report.records) {
            eps_fit.push_back(rec.eps_fit);
            eps_pred.push_back(rec.eps_pred_available ? rec.eps_pred
                                                      : std::numeric_limits<double>::quiet_NaN());
            if (rec.stalled) ++stalled;
        }
        j["summary"] = {{"n_windows", report.records.size()}, {"n_stalled", stalled}};
        // NaN is not representable in JSON; ship eps arrays as strings.
        nlohmann::json jf = nlohmann::json::array(), jp = nlohmann::json::array();
        for (double e : eps_fit) jf.push_back(fmt_double(e));
        for (double e : eps_pred) jp.push_back(fmt_double(e));
        j["eps_fit"] = jf;
        j["eps_pred"] = jp;

        auto out = detail::open_out(out_dir / "run.json");
        out << j.dump(2) << '\n';
        manifest.push_back((out_dir / "run.json").string());
    }

    return manifest;
}

// Reads a posterior_<n>.csv back into particles/weights/distances.
inline WeightedPosterior read_posterior_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw parse_error("empty posterior file", 1);
    WeightedPosterior post;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::vector<std::string> f = detail::split_csv_line(line);
        if (f.size() != SeirdParams::n_params + 2) throw parse_error("bad particle row", lineno);
        std::array<double, SeirdParams::n_params> a;
        for (std::size_t k = 0; k < a.size(); ++k) a[k] = std::stod(f[k]);
        post.particles.push_back(SeirdParams::from_array(a));
        post.weights.push_back(std::stod(f[SeirdParams::n_params]));
        post.distances.push_back(std::stod(f[SeirdParams::n_params + 1]));
    }
    return post;
}

}  // namespace epiwin

#endif
