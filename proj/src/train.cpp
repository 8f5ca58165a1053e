#include "dal/train.hpp"

#include <fstream>

#include "dal/parallel.hpp"

namespace dal {

Adam::Adam(ParamList<float> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        m_[i].assign(params_[i].w->size(), 0.f);
        v_[i].assign(params_[i].w->size(), 0.f);
    }
}

void Adam::step() {
    ++steps_;
    const double bc1 = 1.0 - std::pow(beta1_, steps_);
    const double bc2 = 1.0 - std::pow(beta2_, steps_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& w = *params_[i].w;
        auto& g = *params_[i].g;
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = static_cast<float>(beta1_ * m[j] + (1.0 - beta1_) * g[j]);
            v[j] = static_cast<float>(beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j]);
            const double mh = m[j] / bc1;
            const double vh = v[j] / bc2;
            w[j] -= static_cast<float>(lr_ * mh / (std::sqrt(vh) + eps_));
            g[j] = 0.f;
        }
    }
}

void Adam::zero_grads() {
    for (auto& p : params_)
        for (auto& g : *p.g) g = 0.f;
}

namespace {

Image rot90_times(const Image& img, int k) {
    if (k == 0) return img;
    const int d = img.size;
    Image out(d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            double v = 0;
            switch (k) {
                case 1: v = img.at(c, d - 1 - r); break;
                case 2: v = img.at(d - 1 - r, d - 1 - c); break;
                default: v = img.at(d - 1 - c, r); break;
            }
            out.at(r, c) = v;
        }
    return out;
}

Image augment_image(const Image& img, const TrainConfig& cfg, Rng& rng) {
    Image out = rot90_times(img, static_cast<int>(rng.uniform_int(0, 3)));
    const double angle = rng.uniform(-10.0, 10.0);
    out = rotate_image(out, angle);
    const double scale = rng.uniform(cfg.scale_min, cfg.scale_max);
    if (scale > 1.0) out = scale_crop(out, scale);
    return out;
}

}  // namespace

TrainResult train(const std::vector<Image>& dataset, const TrainConfig& cfg,
                  const NoiseSchedule& sched, const ArchConfig& arch) {
    require(!dataset.empty(), "train: empty dataset");
    const int d = dataset[0].size;
    for (const Image& im : dataset) require(im.size == d, "train: images must share one size");
    require(cfg.epochs >= 1 && cfg.batch_size >= 1, "train: bad epochs/batch size");
    require(cfg.scale_min >= 1.0 && cfg.scale_max <= 1.3 && cfg.scale_min <= cfg.scale_max,
            "train: scale range must lie within [1.0, 1.3]");
    require(cfg.ema_decay >= 0.0 && cfg.ema_decay < 1.0, "train: ema decay in [0,1)");

    DenoiserModel::Meta meta;
    meta.arch = arch;
    meta.schedule_T = sched.T;
    meta.schedule_beta1 = sched.beta.front();
    meta.schedule_betaT = sched.beta.back();
    meta.train_seed = cfg.seed;

    std::uint64_t dhash = fnv1a("dataset");
    for (const Image& im : dataset)
        dhash = fnv1a(im.pixels.data(), im.pixels.size() * sizeof(double), dhash);
    meta.dataset_hash = dhash;

    auto model = std::make_unique<DenoiserModel>(meta, derive_seed(cfg.seed, fnv1a("init")));
    auto params = model->net().params();
    Adam opt(params, cfg.learning_rate);

    std::vector<std::vector<float>> ema(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) ema[i] = *params[i].w;

    std::vector<LossPoint> curve;
    const int n = static_cast<int>(dataset.size());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    int global_step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, {fnv1a("shuffle"), static_cast<std::uint64_t>(epoch)}));
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.uniform_int(0, i));
            std::swap(order[i], order[j]);
        }
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int bs = std::min(cfg.batch_size, n - start);
            Tensor x_t(bs, 1, d, d);
            Tensor eps(bs, 1, d, d);
            std::vector<int> t(bs);
            parallel_for(bs, [&](std::int64_t bj) {
                const int b = static_cast<int>(bj);
                Rng rng(derive_seed(cfg.seed, {fnv1a("batch"), static_cast<std::uint64_t>(epoch),
                                               static_cast<std::uint64_t>(start + b)}));
                Image img = dataset[order[start + b]];
                if (cfg.augment) img = augment_image(img, cfg, rng);
                t[b] = static_cast<int>(rng.uniform_int(1, sched.T));
                const double ab = sched.alpha_bar_at(t[b]);
                const double ca = std::sqrt(ab), cb = std::sqrt(1.0 - ab);
                float* xp = x_t.item(b);
                float* ep = eps.item(b);
                for (std::size_t k = 0; k < img.pixels.size(); ++k) {
                    const double e = rng.normal();
                    const double x0 = 2.0 * img.pixels[k] - 1.0;
                    ep[k] = static_cast<float>(e);
                    xp[k] = static_cast<float>(ca * x0 + cb * e);
                }
            });

            const Tensor pred = model->net().forward(x_t, t, /*save=*/true);
            double loss = 0.0;
            Tensor grad(bs, 1, d, d);
            const float inv_b = 1.f / static_cast<float>(bs);
            for (std::size_t k = 0; k < pred.v.size(); ++k) {
                const float r = pred.v[k] - eps.v[k];
                loss += static_cast<double>(r) * r;
                grad.v[k] = 2.f * r * inv_b;
            }
            loss /= bs;
            ++global_step;
            if (!std::isfinite(loss))
                fail("train: non-finite loss at step " + std::to_string(global_step));
            curve.push_back({epoch, global_step, loss});

            model->net().backward(grad);
            opt.step();
            for (std::size_t i = 0; i < params.size(); ++i) {
                const auto& w = *params[i].w;
                auto& e = ema[i];
                for (std::size_t j = 0; j < w.size(); ++j)
                    e[j] = static_cast<float>(cfg.ema_decay * e[j] + (1.0 - cfg.ema_decay) * w[j]);
            }
        }
    }

    for (std::size_t i = 0; i < params.size(); ++i) *params[i].w = ema[i];
    TrainResult res;
    res.model = std::move(model);
    res.curve = std::move(curve);
    return res;
}

void write_loss_csv(const std::string& path, const std::vector<LossPoint>& curve) {
    std::ofstream out(path);
    require(out.good(), "write_loss_csv: cannot open " + path);
    out << "epoch,step,loss\n";
    for (const auto& p : curve) out << p.epoch << "," << p.step << "," << p.loss << "\n";
}

}  // namespace dal
