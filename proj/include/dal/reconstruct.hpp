#pragma once

#include "dal/data_term.hpp"

namespace dal {

struct Metrics {
    double psnr = 0.0;  // dB, capped at 99
    double rmse = 0.0;
    double ssim = 0.0;
};

// PSNR with data range 1.0 (cap 99 dB), RMSE, and SSIM with a 7x7 Gaussian
// window and the standard constants.
Metrics compute_metrics(const Image& est, const Image& truth);

struct IterativeConfig {
    int steps = 200;
    double step_size = 0.0;  // 0: auto, 1/L via power iteration
    enum class Link { Identity, Sigmoid };
    Link link = Link::Identity;
    double tv_weight = 0.0;
    enum class Init { Zeros, Fbp, Given };
    Init init = Init::Zeros;
    Image init_image;  // used when init == Given
    double prescan_weight = 1.0;
};

// Ramp-filtered (frequency domain, zero-padded to the next power of two
// >= 2l) back-projection, scaled by pi / (2 * n_angles). Radon data only.
Image fbp(const MeasurementSet& set, const DesignSpace& space, int image_size);

// Gradient descent on the measurement-fidelity loss plus optional smoothed
// anisotropic TV, through an optional sigmoid link. Throws if the loss turns
// non-finite, naming the step.
Image iterative_reconstruct(const MeasurementSet& set, const DesignSpace& space,
                            const IterativeConfig& cfg);

// Smoothed anisotropic total variation sum_edges sqrt(diff^2 + eps) and its
// gradient; exposed for tests.
double tv_value(const Image& x, double eps = 1e-8);
void tv_add_grad(const Image& x, double weight, Image& grad, double eps = 1e-8);

}  // namespace dal
