#include "dal/rng.hpp"

namespace dal {

namespace {

std::int64_t poisson_knuth(Rng& rng, double lambda) {
    const double limit = std::exp(-lambda);
    std::int64_t k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= rng.uniform();
    } while (p > limit);
    return k - 1;
}

// Hoermann's PTRS transformed rejection, exact for lambda >= ~10.
std::int64_t poisson_ptrs(Rng& rng, double lambda) {
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
        if (k < 0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b)
            <= k * loglam - lambda - std::lgamma(k + 1.0)) {
            return static_cast<std::int64_t>(k);
        }
    }
}

}  // namespace

std::int64_t Rng::poisson(double lambda) {
    require(lambda >= 0.0, "poisson: negative mean");
    if (lambda == 0.0) return 0;
    if (lambda < 12.0) return poisson_knuth(*this, lambda);
    return poisson_ptrs(*this, lambda);
}

}  // namespace dal
