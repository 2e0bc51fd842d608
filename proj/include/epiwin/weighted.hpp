#ifndef EPIWIN_WEIGHTED_HPP
#define EPIWIN_WEIGHTED_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "epiwin/errors.hpp"

namespace epiwin {

// Weighted sample statistics. Weights are assumed normalized (sum 1);
// callers normalize once at posterior construction.

inline double weighted_mean(std::span<const double> x, std::span<const double> w) {
    double m = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) m += w[j] * x[j];
    return m;
}

inline double weighted_variance(std::span<const double> x, std::span<const double> w) {
    const double m = weighted_mean(x, w);
    double v = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) v += w[j] * (x[j] - m) * (x[j] - m);
    return v;
}

inline double effective_sample_size(std::span<const double> w) {
    double sq = 0.0;
    for (double wj : w) sq += wj * wj;
    return sq > 0.0 ? 1.0 / sq : 0.0;
}

// Weighted quantile with linear interpolation on the cumulative weight,
// midpoint convention: particle j sits at cumulative mass W_{j-1} + w_j / 2.
inline double weighted_quantile(std::span<const double> x, std::span<const double> w,
                                double q) {
    if (x.empty() || x.size() != w.size())
        throw invalid_state_error("weighted_quantile: bad input");
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    double cum = 0.0;
    double prev_pos = 0.0;
    double prev_val = x[order[0]];
    for (std::size_t k = 0; k < order.size(); ++k) {
        const double wk = w[order[k]];
        const double pos = cum + 0.5 * wk;
        const double val = x[order[k]];
        if (q <= pos) {
            if (k == 0 || pos == prev_pos) return val;
            const double t = (q - prev_pos) / (pos - prev_pos);
            return prev_val + t * (val - prev_val);
        }
        cum += wk;
        prev_pos = pos;
        prev_val = val;
    }
    return x[order.back()];
}

inline double weighted_median(std::span<const double> x, std::span<const double> w) {
    return weighted_quantile(x, w, 0.5);
}

}  // namespace epiwin

#endif
