#pragma once

#include "dal/denoiser.hpp"
#include "dal/image.hpp"
#include "dal/schedule.hpp"

namespace dal {

// Affine map between the canonical [0,1] image range and the diffusion
// process domain [-1,1].
Image normalize_to_diffusion(const Image& img);
Image denormalize_from_diffusion(const Image& img);

Tensor images_to_tensor(const std::vector<Image>& imgs);
std::vector<Image> tensor_to_images(const Tensor& t);

// Variance-preserving forward noising:
// sqrt(ab_t) x0 + sqrt(1 - ab_t) eps, operating in the diffusion domain.
Image q_sample(const Image& x0, int t, const Image& eps, const NoiseSchedule& sched);

// Posterior-mean denoiser (eps-prediction form of Tweedie's formula):
// (x_t - sqrt(1 - ab_t) eps_hat) / sqrt(ab_t).
Image tweedie(const Image& x_t, int t, Denoiser& den, const NoiseSchedule& sched);

// Evenly strided descending timestep subsequence used by the DDIM loop;
// last entry steps to alpha_bar = 1.
std::vector<int> ddim_timesteps(int T, int num_steps);

// Deterministic (eta = 0) DDIM sampler starting from k i.i.d. Gaussian
// images; per-chain noise streams derive from (seed, chain). Outputs are
// mapped back to the [0,1] domain.
std::vector<Image> ddim_sample(Denoiser& den, const NoiseSchedule& sched, int num_steps,
                               std::uint64_t seed, int k, int image_size);

// Gaussian draw of an image in the diffusion domain (unit normals).
Image gaussian_image(int d, Rng& rng);

}  // namespace dal
