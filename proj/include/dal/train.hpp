#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dal/denoiser.hpp"
#include "dal/diffusion.hpp"

namespace dal {

struct TrainConfig {
    int epochs = 30;
    int batch_size = 32;
    double learning_rate = 2e-4;
    double ema_decay = 0.999;
    bool augment = true;       // right-angle + continuous rotation
    double scale_min = 1.0;    // random scale range, within [1.0, 1.3]
    double scale_max = 1.3;
    std::uint64_t seed = 0;
};

struct LossPoint {
    int epoch = 0;
    int step = 0;  // global step
    double loss = 0.0;
};

struct TrainResult {
    std::unique_ptr<DenoiserModel> model;  // EMA weights
    std::vector<LossPoint> curve;
};

// Denoising score-matching training: minimizes E ||eps_hat(q_sample(x0,t,eps), t) - eps||^2
// (per-sample sum over pixels, mean over the batch) with Adam and an EMA
// copy of the weights. Deterministic per seed: fixed data order and
// stateless per-item RNG streams.
TrainResult train(const std::vector<Image>& dataset, const TrainConfig& cfg,
                  const NoiseSchedule& sched, const ArchConfig& arch);

void write_loss_csv(const std::string& path, const std::vector<LossPoint>& curve);

// Adam over a parameter registry; exposed for the SWAG/ensemble-style tests.
class Adam {
public:
    Adam(ParamList<float> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8);
    void step();        // applies grads, then zeroes them
    void zero_grads();

private:
    ParamList<float> params_;
    std::vector<std::vector<float>> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    long steps_ = 0;
};

}  // namespace dal
