#pragma once

#include <functional>
#include <memory>
#include <string>

#include "dal/schedule.hpp"
#include "dal/unet.hpp"

namespace dal {

// Noise predictor eps_hat(x_t, t) in the [-1, 1] diffusion domain. The score
// is s(x_t, t) = -eps_hat / sqrt(1 - alpha_bar_t).
class Denoiser {
public:
    virtual ~Denoiser() = default;
    // x_t: (n, 1, d, d); t: one (1-based) timestep per item.
    virtual Tensor predict(const Tensor& x_t, const std::vector<int>& t) = 0;
    virtual std::uint64_t weights_hash() const { return 0; }
};

// Closed-form or scripted predictors, for tests and oracles.
class FunctionalDenoiser : public Denoiser {
public:
    using Fn = std::function<Tensor(const Tensor&, const std::vector<int>&)>;
    explicit FunctionalDenoiser(Fn fn) : fn_(std::move(fn)) {}
    Tensor predict(const Tensor& x_t, const std::vector<int>& t) override { return fn_(x_t, t); }

private:
    Fn fn_;
};

// Trained U-Net denoiser with its checkpoint metadata. The checkpoint file
// is a plain-text JSON manifest (architecture, schedule parameters, training
// seed, dataset hash, parameter index) followed by little-endian float32
// blobs keyed by parameter name.
class DenoiserModel : public Denoiser {
public:
    struct Meta {
        ArchConfig arch;
        int schedule_T = 1000;
        double schedule_beta1 = 1e-4;
        double schedule_betaT = 0.02;
        std::uint64_t train_seed = 0;
        std::uint64_t dataset_hash = 0;
    };

    DenoiserModel(const Meta& meta, std::uint64_t init_seed);

    Tensor predict(const Tensor& x_t, const std::vector<int>& t) override;
    std::uint64_t weights_hash() const override;

    nn::UNet<float>& net() { return *net_; }
    const Meta& meta() const { return meta_; }
    Meta& meta() { return meta_; }
    NoiseSchedule schedule() const {
        return make_schedule(meta_.schedule_T, meta_.schedule_beta1, meta_.schedule_betaT);
    }

    // deep copy (weights included); parallel runs clone instead of sharing
    std::unique_ptr<DenoiserModel> clone() const;

    void save(const std::string& path) const;
    static std::unique_ptr<DenoiserModel> load(const std::string& path);

private:
    Meta meta_;
    std::unique_ptr<nn::UNet<float>> net_;
};

}  // namespace dal
