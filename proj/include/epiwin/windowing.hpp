#ifndef EPIWIN_WINDOWING_HPP
#define EPIWIN_WINDOWING_HPP

#include <algorithm>
#include <optional>

#include "epiwin/errors.hpp"

namespace epiwin {

struct WindowConfig {
    int s_initial = 30;  // first-window size [days]
    int s_min = 10;
    int s_max = 50;
    int shift = 5;    // offset d between consecutive window ends; also the resize step
    int horizon = 10; // forecast length [days]

    // s_min must exceed the number of free model parameters (8) so every
    // window has more data points than parameters.
    bool valid() const {
        return s_min > 8 && s_min <= s_initial && s_initial <= s_max &&
               shift >= 1 && horizon >= 1;
    }
};

// Windows are end-anchored: the end day advances by exactly `shift` each
// step and size changes move the start.
struct TimeWindow {
    int index = 1;  // 1-based ordinal
    int start = 0;  // day index into the series
    int size = 0;   // s_n [days]

    int end() const { return start + size; }  // one past the last day
    int last_day() const { return start + size - 1; }
};

inline TimeWindow first_window(const WindowConfig& config, int series_len) {
    if (series_len < config.s_initial)
        throw insufficient_data_error("series shorter than the initial window size");
    return {1, 0, config.s_initial};
}

// Window-size update for n >= 3: grow by `shift` when the fit improved
// (eps_prev <= eps_prev2), shrink otherwise, clamped to [s_min, s_max].
// Window 2 keeps the size of window 1 and never reaches this function.
inline int select_window_size(double eps_prev, double eps_prev2, int s_prev,
                              const WindowConfig& config) {
    if (eps_prev <= eps_prev2) {
        return s_prev < config.s_max ? std::min(s_prev + config.shift, config.s_max)
                                     : config.s_max;
    }
    return s_prev > config.s_min ? std::max(s_prev - config.shift, config.s_min)
                                 : config.s_min;
}

// Advances the end day by `shift` and re-anchors the start for the new size.
// At the series head the start is clamped to 0 and the size shrinks.
// Returns nullopt once the end runs past the data.
inline std::optional<TimeWindow> next_window(const TimeWindow& prev, int new_size,
                                             const WindowConfig& config, int series_len) {
    const int new_end = prev.end() + config.shift;
    if (new_end > series_len) return std::nullopt;
    TimeWindow w;
    w.index = prev.index + 1;
    w.start = new_end - new_size;
    w.size = new_size;
    if (w.start < 0) {
        w.size += w.start;
        w.start = 0;
    }
    (void)config;
    return w;
}

}  // namespace epiwin

#endif
