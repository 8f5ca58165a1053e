#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dal/geometry.hpp"
#include "dal/rng.hpp"

namespace dal {

// Measurement noise of Eq.-style forward model: none, additive Gaussian in
// the line-integral domain, or Poisson photon counting with I0 photons per
// ray (Beer-Lambert, counts clamped at >= 1 before the log).
struct NoiseModel {
    enum class Kind { None, Gaussian, Poisson };
    Kind kind = Kind::None;
    double sigma = 0.0;         // Gaussian std, intensity units
    double photon_count = 0.0;  // Poisson I0 per ray

    static NoiseModel none() { return {}; }
    static NoiseModel gaussian(double sigma);
    static NoiseModel poisson(double i0);
};

struct PreScan {
    int factor = 0;          // downsampling factor >= 2
    Image image_lowres;      // observed d/factor image
    NoiseModel noise;
};

// Ordered set of acquired measurements; steps start at 1 and designs are
// unique.
struct MeasurementSet {
    struct Entry {
        int design = -1;
        Projection proj;
        int step = 0;
    };
    std::vector<Entry> entries;
    std::optional<PreScan> prescan;

    bool contains(int design) const;
    int size() const { return static_cast<int>(entries.size()); }
    bool empty() const { return entries.empty(); }
    std::vector<char> measured_mask(int design_count) const;
    std::uint64_t hash() const;
};

// Simulates one measurement: forward projection of the ground truth at the
// given design plus one noise draw. Deterministic per seed.
Projection measure(const Image& truth, int design, const DesignSpace& space,
                   const NoiseModel& noise, std::uint64_t seed);

// Low-resolution overview scan: block-averaged truth with per-pixel noise.
PreScan prescan_measure(const Image& truth, int factor, const NoiseModel& noise,
                        std::uint64_t seed);

// Returns `set` extended by one entry with step = previous max + 1; rejects
// duplicate designs.
MeasurementSet add_measurement(const MeasurementSet& set, int design, const Projection& proj);

}  // namespace dal
