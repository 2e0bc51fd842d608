#ifndef EPIWIN_ERRORS_HPP
#define EPIWIN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace epiwin {

struct invalid_state_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sampled population too small for the observed counts at the window start.
struct infeasible_population_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct divergence_error : std::runtime_error {
    divergence_error(const std::string& msg, long step)
        : std::runtime_error(msg), step_index(step) {}
    long step_index;
};

struct insufficient_data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct degenerate_prior_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct stalled_inference_error : std::runtime_error {
    stalled_inference_error(const std::string& msg, double tol)
        : std::runtime_error(msg), last_tolerance(tol) {}
    double last_tolerance;
};

struct degenerate_denominator_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct incomparable_runs_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct parse_error : std::runtime_error {
    parse_error(const std::string& msg, long line)
        : std::runtime_error(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
    long line_number;
};

struct unknown_region_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace epiwin

#endif
