#ifndef EPIWIN_RNG_HPP
#define EPIWIN_RNG_HPP

#include <cstdint>
#include <random>

namespace epiwin {

using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// Derives an independent child seed from a parent seed and one or more
// stream indices. Used to give every SMC candidate, window, and replicate
// its own stream, so results do not depend on worker count or scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed) { return detail::splitmix64(seed); }

template <typename... Ids>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t id, Ids... rest) {
    return derive_seed(detail::splitmix64(seed ^ detail::splitmix64(id)), rest...);
}

template <typename... Ids>
Rng make_stream(std::uint64_t seed, Ids... ids) {
    return Rng(derive_seed(seed, static_cast<std::uint64_t>(ids)...));
}

}  // namespace epiwin

#endif
