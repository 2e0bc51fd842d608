#ifndef EPIWIN_METRICS_HPP
#define EPIWIN_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "epiwin/errors.hpp"

namespace epiwin {

// NRMSD of one data channel. When the data range is zero the value falls back
// to the unnormalized RMSD and `degenerate` is set.
struct ChannelNrmsd {
    double value = 0.0;
    bool degenerate = false;
};

struct NrmsdBreakdown {
    std::vector<ChannelNrmsd> per_component;
    double total = 0.0;
};

struct RatioStats {
    std::vector<double> ratios;
    double fraction_above_one = 0.0;
    double q1 = 0.0, median = 0.0, q3 = 0.0;
};

// RMS residual over the window divided by the data range.
inline ChannelNrmsd nrmsd_component(std::span<const double> y,
                                    std::span<const double> y_hat) {
    if (y.size() != y_hat.size() || y.size() < 2)
        throw invalid_state_error("nrmsd_component: need equal lengths >= 2");
    double sum_sq = 0.0;
    double lo = y[0], hi = y[0];
    for (std::size_t m = 0; m < y.size(); ++m) {
        if (!std::isfinite(y[m]) || !std::isfinite(y_hat[m]))
            throw invalid_state_error("nrmsd_component: non-finite input");
        const double r = y_hat[m] - y[m];
        sum_sq += r * r;
        lo = std::min(lo, y[m]);
        hi = std::max(hi, y[m]);
    }
    const double rms = std::sqrt(sum_sq / static_cast<double>(y.size()));
    const double range = hi - lo;
    if (range <= 0.0) return {rms, true};
    return {rms / range, false};
}

inline double nrmsd_total(const std::vector<ChannelNrmsd>& components) {
    if (components.empty()) throw invalid_state_error("nrmsd_total: empty");
    double total = 0.0;
    for (const ChannelNrmsd& c : components) total += c.value;
    return total;
}

// Per-day (pred - data) / data; entries with data = 0 come back empty.
inline std::vector<std::optional<double>> relative_error_by_day(
    std::span<const double> pred_daily, std::span<const double> data_daily) {
    if (pred_daily.size() != data_daily.size())
        throw invalid_state_error("relative_error_by_day: length mismatch");
    std::vector<std::optional<double>> out(pred_daily.size());
    for (std::size_t k = 0; k < pred_daily.size(); ++k) {
        if (data_daily[k] != 0.0)
            out[k] = (pred_daily[k] - data_daily[k]) / data_daily[k];
    }
    return out;
}

// Quantile with linear interpolation between order statistics, on a sorted
// sequence.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw invalid_state_error("quantile of empty sequence");
    if (sorted.size() == 1) return sorted[0];
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, q);
}

// Per-window ratios eps_flat / eps_past and their distribution summary.
inline RatioStats ratio_stats(std::span<const double> eps_flat,
                              std::span<const double> eps_past) {
    if (eps_flat.size() != eps_past.size() || eps_flat.empty())
        throw invalid_state_error("ratio_stats: need equal non-empty sequences");
    RatioStats stats;
    stats.ratios.reserve(eps_flat.size());
    std::size_t above = 0;
    for (std::size_t n = 0; n < eps_flat.size(); ++n) {
        if (eps_past[n] <= 0.0)
            throw degenerate_denominator_error("ratio_stats: eps_past contains 0");
        const double r = eps_flat[n] / eps_past[n];
        stats.ratios.push_back(r);
        if (r > 1.0) ++above;
    }
    stats.fraction_above_one =
        static_cast<double>(above) / static_cast<double>(stats.ratios.size());
    std::vector<double> sorted = stats.ratios;
    std::sort(sorted.begin(), sorted.end());
    stats.q1 = quantile_sorted(sorted, 0.25);
    stats.median = quantile_sorted(sorted, 0.5);
    stats.q3 = quantile_sorted(sorted, 0.75);
    return stats;
}

}  // namespace epiwin

#endif
