#ifndef EPIWIN_PRIOR_HPP
#define EPIWIN_PRIOR_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "epiwin/errors.hpp"
#include "epiwin/rng.hpp"
#include "epiwin/seird.hpp"
#include "epiwin/weighted.hpp"

namespace epiwin {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double width() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

// Per-parameter box for the uniform prior and for truncating mixture priors.
struct ParamBounds {
    std::array<Interval, SeirdParams::n_params> box;

    Interval& operator[](std::size_t k) { return box[k]; }
    const Interval& operator[](std::size_t k) const { return box[k]; }

    bool valid() const {
        for (std::size_t k = 0; k < box.size(); ++k) {
            if (!(box[k].lo < box[k].hi) || box[k].lo < 0.0) return false;
        }
        return box[7].hi <= 1.0;  // c_r
    }

    bool contains(const SeirdParams& theta) const {
        const auto a = theta.as_array();
        for (std::size_t k = 0; k < a.size(); ++k)
            if (!box[k].contains(a[k])) return false;
        return true;
    }
};

namespace detail {

inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace detail

// Prior over SeirdParams: either a uniform box or a truncated Gaussian kernel
// mixture built from a previous window's weighted posterior.
class Prior {
  public:
    static Prior uniform(const ParamBounds& bounds) {
        Prior p;
        p.bounds_ = bounds;
        p.is_uniform_ = true;
        return p;
    }

    static Prior mixture(std::vector<SeirdParams> particles, std::vector<double> weights,
                         std::array<double, SeirdParams::n_params> bandwidths,
                         const ParamBounds& truncation) {
        if (particles.empty() || particles.size() != weights.size())
            throw degenerate_prior_error("mixture prior: empty or mismatched particles");
        Prior p;
        p.bounds_ = truncation;
        p.is_uniform_ = false;
        p.particles_ = std::move(particles);
        p.weights_ = std::move(weights);
        p.bandwidths_ = bandwidths;
        double sum = 0.0;
        for (double w : p.weights_) sum += w;
        if (sum <= 0.0) throw degenerate_prior_error("mixture prior: zero total weight");
        for (double& w : p.weights_) w /= sum;
        return p;
    }

    bool is_uniform() const { return is_uniform_; }
    const ParamBounds& support() const { return bounds_; }

    SeirdParams sample(Rng& rng) const {
        if (is_uniform_) {
            std::array<double, SeirdParams::n_params> a;
            for (std::size_t k = 0; k < a.size(); ++k) {
                std::uniform_real_distribution<double> u(bounds_[k].lo, bounds_[k].hi);
                a[k] = u(rng);
            }
            return SeirdParams::from_array(a);
        }
        std::discrete_distribution<std::size_t> pick(weights_.begin(), weights_.end());
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int attempt = 0; attempt < 10000; ++attempt) {
            const auto mu = particles_[pick(rng)].as_array();
            std::array<double, SeirdParams::n_params> a;
            bool inside = true;
            for (std::size_t k = 0; k < a.size(); ++k) {
                a[k] = bandwidths_[k] > 0.0 ? mu[k] + bandwidths_[k] * gauss(rng) : mu[k];
                if (!bounds_[k].contains(a[k])) inside = false;
            }
            if (inside) return SeirdParams::from_array(a);
        }
        throw degenerate_prior_error("mixture prior: truncation rejection exceeded 10^4 attempts");
    }

    double density(const SeirdParams& theta) const {
        if (!bounds_.contains(theta)) return 0.0;
        if (is_uniform_) {
            double volume = 1.0;
            for (const Interval& iv : bounds_.box) volume *= iv.width();
            return 1.0 / volume;
        }
        const auto x = theta.as_array();
        double dens = 0.0;
        for (std::size_t j = 0; j < particles_.size(); ++j) {
            const auto mu = particles_[j].as_array();
            double kern = weights_[j];
            for (std::size_t k = 0; k < x.size() && kern > 0.0; ++k) {
                const double h = bandwidths_[k];
                if (h > 0.0) {
                    const double z_lo = (bounds_[k].lo - mu[k]) / h;
                    const double z_hi = (bounds_[k].hi - mu[k]) / h;
                    const double mass = detail::normal_cdf(z_hi) - detail::normal_cdf(z_lo);
                    kern *= mass > 0.0
                                ? detail::normal_pdf((x[k] - mu[k]) / h) / (h * mass)
                                : 0.0;
                } else if (x[k] != mu[k]) {
                    kern = 0.0;
                }
            }
            dens += kern;
        }
        return dens;
    }

  private:
    Prior() = default;

    ParamBounds bounds_;
    bool is_uniform_ = true;
    std::vector<SeirdParams> particles_;
    std::vector<double> weights_;
    std::array<double, SeirdParams::n_params> bandwidths_{};
};

}  // namespace epiwin

#endif
