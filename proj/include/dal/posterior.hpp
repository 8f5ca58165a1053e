#pragma once

#include "dal/data_term.hpp"
#include "dal/diffusion.hpp"

namespace dal {

enum class ConsistencyMode { Soft, Hard, FourierInpaint };

struct ConsistencyConfig {
    ConsistencyMode mode = ConsistencyMode::Soft;
    int grad_steps = 50;           // SGD steps per diffusion step (Soft / middle Hard phase)
    double step_size = 0.0;        // 0: 1/L, L estimated per measurement set
    int batch_size = 8;            // measurement projections per gradient step; 0 = full batch
    double hard_threshold = 1e-3;  // relative residual target (Hard)
    int hard_max_steps = 2000;
    double prescan_weight = 1.0;
};

struct ConsistencyStats {
    long grad_steps = 0;      // total consistency gradient steps taken
    long denoiser_evals = 0;  // batched reverse-step evaluations
    bool hard_converged = true;
};

// Posterior samples plus their exact per-pixel mean, in the [0,1] domain.
struct SampleBatch {
    std::vector<Image> samples;
    Image mean;
    struct Provenance {
        std::uint64_t model_hash = 0;
        std::uint64_t set_hash = 0;
        std::uint64_t seed = 0;
    } provenance;
    ConsistencyStats stats;

    int k() const { return static_cast<int>(samples.size()); }
};

SampleBatch make_sample_batch(std::vector<Image> samples, SampleBatch::Provenance prov,
                              ConsistencyStats stats = {});

// Exactly cfg.grad_steps stochastic-gradient steps on the measurement loss
// (plus the weighted pre-scan term), initialized at x0_hat and returned
// regardless of the residual. Operates in the diffusion [-1,1] domain; the
// forward operator is wrapped with the affine de-normalization.
Image soft_consistency(const Image& x0_hat, const MeasurementSet& set, const DesignSpace& space,
                       const ConsistencyConfig& cfg, Rng& rng, ConsistencyStats* stats = nullptr);

struct HardResult {
    Image image;
    bool converged = false;
    int steps = 0;
};

// Full-batch gradient descent until the relative residual drops below
// cfg.hard_threshold or cfg.hard_max_steps is exhausted (best iterate is
// returned with converged=false in that case). Diffusion domain like
// soft_consistency.
HardResult hard_consistency(const Image& x0_hat, const MeasurementSet& set,
                            const DesignSpace& space, const ConsistencyConfig& cfg,
                            ConsistencyStats* stats = nullptr);

// Re-noises a data-consistent estimate back to the timestep-t marginal:
// sqrt(ab_t) x + sqrt(1-ab_t) eps with a fresh draw.
Image stochastic_encode(const Image& x0_star, int t, std::uint64_t seed,
                        const NoiseSchedule& sched);

// Exact minimizer of the k-space row-measurement loss nearest x0_hat:
// overwrites measured rows of the centered spectrum (and their conjugate
// mirrors, keeping the image real) and inverse-transforms. Image domain.
Image fourier_inpaint(const Image& x0_hat, const MeasurementSet& set, const DesignSpace& space);

// Measurement-conditioned DDIM loop: per step tweedie -> consistency (per
// cfg.mode, with the three-phase schedule in Hard mode) -> stochastic
// encoding to the next timestep. Chains are driven by per-chain streams
// derived from (seed, chain). When consistency is structurally a no-op
// (empty data and no pre-scan, or Soft with zero gradient steps) the loop
// reduces exactly to the unconditional DDIM sampler.
SampleBatch conditional_sample_batch(Denoiser& den, const NoiseSchedule& sched,
                                     const MeasurementSet& set, const DesignSpace& space,
                                     int num_steps, int k, const ConsistencyConfig& cfg,
                                     std::uint64_t seed);

}  // namespace dal
