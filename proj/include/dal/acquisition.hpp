#pragma once

#include "dal/posterior.hpp"

namespace dal {

enum class Strategy { Variance, Committee, GaussEntropy, Uniform, LowToHigh };

struct AcquisitionConfig {
    Strategy strategy = Strategy::Variance;
    double sigma_lik = 1e-2;  // Gaussian likelihood scale for GaussEntropy
    std::vector<int> pool;    // non-adaptive design pool; empty = full space
};

// Per-design scores with the already-measured designs masked out; chosen is
// the argmax with lowest-index tie-break. Measured designs carry -inf.
struct ScoreTable {
    std::vector<double> scores;
    std::vector<char> measured;
    int chosen = -1;
};

// score(psi) = (1/k) sum_i ||A_psi(x_i) - A_psi(x_mean)||^2
ScoreTable score_variance(const SampleBatch& batch, const DesignSpace& space,
                          const std::vector<char>& measured);

// score(psi) = sum_i ||A_psi(x_i) - A_psi(ref)||^2
ScoreTable score_committee(const SampleBatch& batch, const Image& reference,
                           const DesignSpace& space, const std::vector<char>& measured);

// score(psi) = log det(sigma_lik I_l + C_psi), with C_psi the 1/k sample
// covariance of the projected batch, evaluated in the k x k Gram form
// det(s I_l + V V^T) = s^(l-k) det(s I_k + V^T V).
ScoreTable score_gauss_entropy(const SampleBatch& batch, double sigma_lik,
                               const DesignSpace& space, const std::vector<char>& measured);

// Bit-reversed (van der Corput) ordering of 0..n-1: every prefix is
// near-equispaced.
std::vector<int> bit_reversed_order(int n);

// Selects the next design: adaptive strategies take the argmax of their
// score table; Uniform walks a precomputed maximally-spread ordering of the
// pool; LowToHigh picks the unmeasured row closest to the spectrum center.
// `batch` may be null for the non-adaptive policies.
int next_design(const AcquisitionConfig& cfg, const SampleBatch* batch, const DesignSpace& space,
                const std::vector<char>& measured, int step,
                ScoreTable* table_out = nullptr);

}  // namespace dal
