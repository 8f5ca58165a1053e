#include "dal/diffusion.hpp"

namespace dal {

Image normalize_to_diffusion(const Image& img) {
    Image out = img;
    for (double& v : out.pixels) v = 2.0 * v - 1.0;
    return out;
}

Image denormalize_from_diffusion(const Image& img) {
    Image out = img;
    for (double& v : out.pixels) v = (v + 1.0) / 2.0;
    return out;
}

Tensor images_to_tensor(const std::vector<Image>& imgs) {
    require(!imgs.empty(), "images_to_tensor: empty list");
    const int d = imgs[0].size;
    Tensor t(static_cast<int>(imgs.size()), 1, d, d);
    for (std::size_t i = 0; i < imgs.size(); ++i) {
        require(imgs[i].size == d, "images_to_tensor: size mismatch");
        float* dst = t.item(static_cast<int>(i));
        for (std::size_t j = 0; j < imgs[i].pixels.size(); ++j)
            dst[j] = static_cast<float>(imgs[i].pixels[j]);
    }
    return t;
}

std::vector<Image> tensor_to_images(const Tensor& t) {
    require(t.c == 1, "tensor_to_images: expected single channel");
    std::vector<Image> out(t.n, Image(t.h));
    for (int i = 0; i < t.n; ++i) {
        const float* src = t.item(i);
        for (std::size_t j = 0; j < out[i].pixels.size(); ++j) out[i].pixels[j] = src[j];
    }
    return out;
}

Image q_sample(const Image& x0, int t, const Image& eps, const NoiseSchedule& sched) {
    require(t >= 1 && t <= sched.T, "q_sample: timestep out of range");
    require(x0.size == eps.size, "q_sample: eps size mismatch");
    const double ab = sched.alpha_bar_at(t);
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    Image out(x0.size);
    for (std::size_t i = 0; i < out.pixels.size(); ++i)
        out.pixels[i] = a * x0.pixels[i] + b * eps.pixels[i];
    return out;
}

Image tweedie(const Image& x_t, int t, Denoiser& den, const NoiseSchedule& sched) {
    require(t >= 1 && t <= sched.T, "tweedie: timestep out of range");
    const Tensor xt = images_to_tensor({x_t});
    const Tensor eps = den.predict(xt, {t});
    const double ab = sched.alpha_bar_at(t);
    const double inv = 1.0 / std::sqrt(ab), b = std::sqrt(1.0 - ab);
    Image out(x_t.size);
    const float* e = eps.item(0);
    for (std::size_t i = 0; i < out.pixels.size(); ++i)
        out.pixels[i] = (x_t.pixels[i] - b * static_cast<double>(e[i])) * inv;
    return out;
}

std::vector<int> ddim_timesteps(int T, int num_steps) {
    require(num_steps >= 1 && num_steps <= T, "ddim_timesteps: need 1 <= num_steps <= T");
    std::vector<int> ts(num_steps);
    for (int j = 0; j < num_steps; ++j) {
        ts[j] = static_cast<int>(static_cast<std::int64_t>(T) * (num_steps - j) / num_steps);
    }
    return ts;
}

Image gaussian_image(int d, Rng& rng) {
    Image img(d);
    for (double& v : img.pixels) v = rng.normal();
    return img;
}

std::vector<Image> ddim_sample(Denoiser& den, const NoiseSchedule& sched, int num_steps,
                               std::uint64_t seed, int k, int image_size) {
    require(k >= 1, "ddim_sample: k must be >= 1");
    const auto ts = ddim_timesteps(sched.T, num_steps);
    std::vector<Image> chains(k);
    for (int i = 0; i < k; ++i) {
        Rng rng(derive_seed(seed, {fnv1a("ddim-init"), static_cast<std::uint64_t>(i)}));
        chains[i] = gaussian_image(image_size, rng);
    }
    Tensor x = images_to_tensor(chains);
    for (std::size_t j = 0; j < ts.size(); ++j) {
        const int t = ts[j];
        const int t_prev = j + 1 < ts.size() ? ts[j + 1] : 0;
        const Tensor eps = den.predict(x, std::vector<int>(k, t));
        const double ab = sched.alpha_bar_at(t);
        const double ab_prev = sched.alpha_bar_at(t_prev);
        const float c0 = static_cast<float>(std::sqrt(ab_prev / ab));
        const float c1 = static_cast<float>(std::sqrt(1.0 - ab_prev)
                                            - std::sqrt(ab_prev * (1.0 - ab) / ab));
        for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] = c0 * x.v[i] + c1 * eps.v[i];
    }
    std::vector<Image> out = tensor_to_images(x);
    for (Image& img : out) img = denormalize_from_diffusion(img);
    return out;
}

}  // namespace dal
