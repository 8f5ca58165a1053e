#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "dal/train.hpp"
#include "test_util.hpp"

using namespace dal;
using namespace dal::testutil;

TEST_CASE("make_schedule: tables, identities and validation") {
    const NoiseSchedule s = make_schedule(1000, 1e-4, 0.02);
    CHECK(s.T == 1000);
    for (int t = 1; t < 1000; ++t) CHECK(s.alpha_bar[t] < s.alpha_bar[t - 1]);
    CHECK(s.alpha_bar[999] < 1e-4);
    CHECK(s.alpha_bar[0] == doctest::Approx(1.0).epsilon(1e-3));
    for (int t = 0; t < 1000; ++t) {
        CHECK(s.alpha[t] == 1.0 - s.beta[t]);
        const double prev = t == 0 ? 1.0 : s.alpha_bar[t - 1];
        CHECK(s.alpha_bar[t] == prev * s.alpha[t]);
    }

    const NoiseSchedule two = make_schedule(2, 0.5, 0.5);
    CHECK(two.alpha_bar[0] == doctest::Approx(0.5));
    CHECK(two.alpha_bar[1] == doctest::Approx(0.25));

    CHECK_THROWS(make_schedule(1000, 0.02, 1e-4));  // beta1 > betaT
    CHECK_THROWS(make_schedule(1, 1e-4, 0.02));
    CHECK_THROWS(make_schedule(1000, 1e-4, 1.0));
}

TEST_CASE("q_sample: limits, scaling and Monte-Carlo moments") {
    Rng rng(1);
    const int d = 8;
    Image x0 = random_image(d, rng);
    x0 = normalize_to_diffusion(x0);

    // near-zero noise at t=1 recovers x0
    const NoiseSchedule tiny = make_schedule(10, 1e-12, 1e-4);
    Image eps = gaussian_image(d, rng);
    const Image almost = q_sample(x0, 1, eps, tiny);
    for (std::size_t i = 0; i < almost.pixels.size(); ++i)
        CHECK(almost.pixels[i] == doctest::Approx(x0.pixels[i]).epsilon(1e-5));

    // zero signal: exactly scaled noise
    const NoiseSchedule s = make_schedule(1000, 1e-4, 0.02);
    const Image zero(d, 0.0);
    const int t = 600;
    const Image scaled = q_sample(zero, t, eps, s);
    const double b = std::sqrt(1.0 - s.alpha_bar_at(t));
    for (std::size_t i = 0; i < scaled.pixels.size(); ++i)
        CHECK(scaled.pixels[i] == doctest::Approx(b * eps.pixels[i]).epsilon(1e-12));

    // moments over 1e4 draws of one pixel
    const int n = 10000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        Rng r(derive_seed(777, i));
        const Image e = gaussian_image(d, r);
        const double v = q_sample(x0, t, e, s).pixels[5];
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    const double ab = s.alpha_bar_at(t);
    CHECK(mean == doctest::Approx(std::sqrt(ab) * x0.pixels[5]).epsilon(0.03).scale(1.0));
    CHECK(var == doctest::Approx(1.0 - ab).epsilon(0.03));
}

TEST_CASE("tweedie: zero predictor, Gaussian-prior oracle, small-t limit") {
    Rng rng(2);
    const int d = 8;
    const NoiseSchedule s = make_schedule(1000, 1e-4, 0.02);

    FunctionalDenoiser zero_den([](const Tensor& x, const std::vector<int>&) {
        return Tensor(x.n, x.c, x.h, x.w);
    });
    const Image x_t = gaussian_image(d, rng);
    const int t = 400;
    const Image x0 = tweedie(x_t, t, zero_den, s);
    const double inv = 1.0 / std::sqrt(s.alpha_bar_at(t));
    for (std::size_t i = 0; i < x0.pixels.size(); ++i)
        CHECK(x0.pixels[i] == doctest::Approx(x_t.pixels[i] * inv).epsilon(1e-12));

    // conjugate-Gaussian prior N(mu, tau^2): the oracle noise predictor is
    // eps(x_t) = sqrt(1-ab) (x_t - sqrt(ab) mu) / (ab tau^2 + 1 - ab) and
    // tweedie must return the analytic posterior mean.
    const double mu = 0.3, tau = 0.7;
    FunctionalDenoiser oracle([&](const Tensor& x, const std::vector<int>& ts) {
        Tensor out(x.n, x.c, x.h, x.w);
        const double ab = s.alpha_bar_at(ts[0]);
        const double denom = ab * tau * tau + 1.0 - ab;
        for (std::size_t i = 0; i < x.v.size(); ++i)
            out.v[i] = static_cast<float>(std::sqrt(1.0 - ab)
                                          * (x.v[i] - std::sqrt(ab) * mu) / denom);
        return out;
    });
    // tolerance reflects the float32 denoiser interface; the formula itself
    // is checked to 1e-12 against the zero predictor above
    for (int tt : {50, 400, 900}) {
        const Image est = tweedie(x_t, tt, oracle, s);
        const double ab = s.alpha_bar_at(tt);
        const double denom = ab * tau * tau + 1.0 - ab;
        for (std::size_t i = 0; i < est.pixels.size(); ++i) {
            const double want = (std::sqrt(ab) * tau * tau * x_t.pixels[i] + (1.0 - ab) * mu) / denom;
            CHECK(est.pixels[i] == doctest::Approx(want).epsilon(1e-5).scale(1.0));
        }
    }

    // t -> 0 with bounded predictor: x0_hat = x_t + O(sqrt(1-ab))
    FunctionalDenoiser ones([](const Tensor& x, const std::vector<int>&) {
        Tensor out(x.n, x.c, x.h, x.w);
        for (auto& v : out.v) v = 1.f;
        return out;
    });
    const Image near = tweedie(x_t, 1, ones, s);
    const double bound = 3.0 * std::sqrt(1.0 - s.alpha_bar_at(1));
    for (std::size_t i = 0; i < near.pixels.size(); ++i)
        CHECK(std::abs(near.pixels[i] - x_t.pixels[i]) < bound + 1e-6);
}

TEST_CASE("ddim_sample: evaluation count, stride and determinism") {
    const NoiseSchedule s = make_schedule(1000, 1e-4, 0.02);
    int calls = 0;
    FunctionalDenoiser counting([&](const Tensor& x, const std::vector<int>& ts) {
        ++calls;
        CHECK(x.n == 3);
        for (int t : ts) CHECK(t == ts[0]);
        Tensor out(x.n, x.c, x.h, x.w);
        for (std::size_t i = 0; i < x.v.size(); ++i) out.v[i] = 0.1f * x.v[i];
        return out;
    });
    const auto samples = ddim_sample(counting, s, 50, 11, 3, 8);
    CHECK(calls == 50);  // one batched evaluation per reverse step
    CHECK(samples.size() == 3);

    const auto ts = ddim_timesteps(1000, 50);
    CHECK(ts.front() == 1000);
    CHECK(ts.back() == 20);
    for (std::size_t i = 1; i < ts.size(); ++i) CHECK(ts[i - 1] - ts[i] == 20);

    const auto again = ddim_sample(counting, s, 50, 11, 3, 8);
    for (int i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < samples[i].pixels.size(); ++j)
            CHECK(samples[i].pixels[j] == again[i].pixels[j]);
}

namespace {

std::vector<Image> bimodal_dataset(int n, int d) {
    std::vector<Image> data;
    for (int i = 0; i < n; ++i) data.push_back(Image(d, i % 2 ? 0.8 : 0.2));
    return data;
}

ArchConfig toy_arch() {
    ArchConfig a;
    a.levels = 2;
    a.base_channels = 8;
    a.blocks_per_level = 1;
    a.time_embed_dim = 16;
    return a;
}

}  // namespace

TEST_CASE("train: loss decreases, untrained baseline, determinism") {
    const int d = 8;
    const NoiseSchedule s = make_schedule(400, 1e-3, 0.05);

    // untrained model predicts zero noise (zero-init output conv), so the
    // training loss sits at E||eps||^2 = d^2
    {
        DenoiserModel::Meta meta;
        meta.arch = toy_arch();
        DenoiserModel model(meta, 1);
        Rng rng(3);
        const int bs = 16;
        Tensor x(bs, 1, d, d);
        for (auto& v : x.v) v = static_cast<float>(rng.normal());
        const Tensor pred = model.predict(x, std::vector<int>(bs, 200));
        double loss = 0.0;
        for (std::size_t i = 0; i < pred.v.size(); ++i) {
            const double r = pred.v[i] - x.v[i];  // x here plays the role of eps
            loss += r * r;
        }
        loss /= bs;
        CHECK(loss == doctest::Approx(d * d).epsilon(0.2));
    }

    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.batch_size = 16;
    cfg.learning_rate = 2e-3;
    cfg.ema_decay = 0.99;
    cfg.augment = false;
    cfg.seed = 5;
    const auto data = bimodal_dataset(32, d);
    auto res = train(data, cfg, s, toy_arch());
    REQUIRE(!res.curve.empty());
    double tail = 0.0;
    const int ntail = 4;
    for (int i = 0; i < ntail; ++i) tail += res.curve[res.curve.size() - 1 - i].loss;
    tail /= ntail;
    CHECK(tail < res.curve.front().loss);

    auto res2 = train(data, cfg, s, toy_arch());
    CHECK(res.curve.back().loss == doctest::Approx(res2.curve.back().loss).epsilon(1e-6));

    // checkpoint round trip preserves predictions and metadata
    const std::string path = (std::filesystem::temp_directory_path() / "dal_ckpt_test.bin").string();
    res.model->save(path);
    auto loaded = DenoiserModel::load(path);
    CHECK(loaded->meta().arch == toy_arch());
    CHECK(loaded->meta().train_seed == 5);
    CHECK(loaded->weights_hash() == res.model->weights_hash());
    Rng rng(7);
    Tensor x(2, 1, d, d);
    for (auto& v : x.v) v = static_cast<float>(rng.normal());
    const Tensor a = res.model->predict(x, {10, 300});
    const Tensor b = loaded->predict(x, {10, 300});
    for (std::size_t i = 0; i < a.v.size(); ++i) CHECK(a.v[i] == b.v[i]);
    std::filesystem::remove(path);
}

TEST_CASE("train + ddim: bimodal constant prior covers both modes") {
    const int d = 8;
    const NoiseSchedule s = make_schedule(400, 1e-3, 0.05);
    TrainConfig cfg;
    cfg.epochs = 1500;
    cfg.batch_size = 32;
    cfg.learning_rate = 3e-3;
    cfg.ema_decay = 0.99;
    cfg.augment = false;
    cfg.seed = 9;
    const auto data = bimodal_dataset(64, d);
    auto res = train(data, cfg, s, toy_arch());

    const auto samples = ddim_sample(*res.model, s, 50, 123, 100, d);
    int near_mode = 0, near_low = 0, near_high = 0;
    for (const Image& im : samples) {
        double mean = 0.0;
        for (double v : im.pixels) mean += v;
        mean /= im.pixels.size();
        if (std::abs(mean - 0.2) < 0.1) {
            ++near_mode;
            ++near_low;
        } else if (std::abs(mean - 0.8) < 0.1) {
            ++near_mode;
            ++near_high;
        }
    }
    CHECK(near_mode >= 90);
    CHECK(near_low >= 10);
    CHECK(near_high >= 10);
}
