#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

#include "dal/common.hpp"

namespace dal {

// Deterministic, portable RNG stream (splitmix64 core, Box-Muller normals).
// Every stochastic component takes an explicit stream; streams for parallel
// work are derived from a base seed plus integer tags so results do not
// depend on scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive bounds
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        require(hi >= lo, "uniform_int: empty range");
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Exact Poisson draw; Knuth below lambda=12, PTRS transformed rejection above.
    std::int64_t poisson(double lambda);

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

// Stable seed derivation: hash-chains the base seed with integer tags.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = fnv1a(&base, sizeof(base));
    for (std::uint64_t t : tags) h = fnv1a(&t, sizeof(t), h);
    // run once through splitmix to decorrelate low bits
    return Rng(h).next_u64();
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    return derive_seed(base, {tag});
}

}  // namespace dal
