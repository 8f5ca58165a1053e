#include "dal/reconstruct.hpp"

#include <complex>

#include "dal/fft.hpp"

namespace dal {

namespace {

double mse(const Image& a, const Image& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        s += d * d;
    }
    return s / static_cast<double>(a.pixels.size());
}

// 7x7 Gaussian window, sigma 1.5, reflect padding.
Image gauss7(const Image& img) {
    const int d = img.size;
    double k[7];
    double sum = 0.0;
    for (int i = -3; i <= 3; ++i) {
        k[i + 3] = std::exp(-0.5 * i * i / (1.5 * 1.5));
        sum += k[i + 3];
    }
    for (double& v : k) v /= sum;
    auto reflect = [d](int i) {
        if (i < 0) i = -i;
        if (i >= d) i = 2 * d - 2 - i;
        return i;
    };
    Image tmp(d), out(d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            double a = 0.0;
            for (int i = -3; i <= 3; ++i) a += k[i + 3] * img.at(r, reflect(c + i));
            tmp.at(r, c) = a;
        }
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            double a = 0.0;
            for (int i = -3; i <= 3; ++i) a += k[i + 3] * tmp.at(reflect(r + i), c);
            out.at(r, c) = a;
        }
    return out;
}

double ssim(const Image& x, const Image& y) {
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;  // data range 1.0
    const Image mx = gauss7(x), my = gauss7(y);
    Image xx(x.size), yy(x.size), xy(x.size);
    for (std::size_t i = 0; i < x.pixels.size(); ++i) {
        xx.pixels[i] = x.pixels[i] * x.pixels[i];
        yy.pixels[i] = y.pixels[i] * y.pixels[i];
        xy.pixels[i] = x.pixels[i] * y.pixels[i];
    }
    const Image mxx = gauss7(xx), myy = gauss7(yy), mxy = gauss7(xy);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.pixels.size(); ++i) {
        const double mu_x = mx.pixels[i], mu_y = my.pixels[i];
        const double vx = mxx.pixels[i] - mu_x * mu_x;
        const double vy = myy.pixels[i] - mu_y * mu_y;
        const double cxy = mxy.pixels[i] - mu_x * mu_y;
        acc += ((2 * mu_x * mu_y + c1) * (2 * cxy + c2))
               / ((mu_x * mu_x + mu_y * mu_y + c1) * (vx + vy + c2));
    }
    return acc / static_cast<double>(x.pixels.size());
}

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

Metrics compute_metrics(const Image& est, const Image& truth) {
    require(est.size == truth.size, "compute_metrics: dimension mismatch");
    Metrics m;
    const double e = mse(est, truth);
    m.rmse = std::sqrt(e);
    m.psnr = e == 0.0 ? 99.0 : std::min(99.0, 10.0 * std::log10(1.0 / e));
    m.ssim = ssim(est, truth);
    return m;
}

Image fbp(const MeasurementSet& set, const DesignSpace& space, int image_size) {
    require(!set.empty(), "fbp: empty measurement set");
    require(space.op.kind == OperatorKind::Radon, "fbp: requires Radon projections");
    const int l = space.op.detector_bins;
    const int n = next_pow2(2 * l);
    Image out(image_size, 0.0);
    std::vector<std::complex<double>> buf(n);
    for (const auto& e : set.entries) {
        require(static_cast<int>(e.proj.values.size()) == l, "fbp: projection length mismatch");
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        for (int k = 0; k < l; ++k) buf[k] = e.proj.values[k];
        fft_1d(buf.data(), n, false);
        // ramp |2 nu|: 0 at DC, 1 at Nyquist
        for (int k = 0; k < n; ++k) {
            const int f = k <= n / 2 ? k : n - k;
            buf[k] *= 2.0 * static_cast<double>(f) / n;
        }
        fft_1d(buf.data(), n, true);
        std::vector<double> filtered(l);
        for (int k = 0; k < l; ++k) filtered[k] = buf[k].real();
        const Image bp = space.adjoint(filtered, e.design);
        for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] += bp.pixels[i];
    }
    const double scale = M_PI / (2.0 * static_cast<double>(set.size()));
    for (double& v : out.pixels) v *= scale;
    return out;
}

double tv_value(const Image& x, double eps) {
    const int d = x.size;
    double total = 0.0;
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            if (c + 1 < d) {
                const double t = x.at(r, c + 1) - x.at(r, c);
                total += std::sqrt(t * t + eps);
            }
            if (r + 1 < d) {
                const double t = x.at(r + 1, c) - x.at(r, c);
                total += std::sqrt(t * t + eps);
            }
        }
    return total;
}

void tv_add_grad(const Image& x, double weight, Image& grad, double eps) {
    const int d = x.size;
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            if (c + 1 < d) {
                const double t = x.at(r, c + 1) - x.at(r, c);
                const double g = weight * t / std::sqrt(t * t + eps);
                grad.at(r, c + 1) += g;
                grad.at(r, c) -= g;
            }
            if (r + 1 < d) {
                const double t = x.at(r + 1, c) - x.at(r, c);
                const double g = weight * t / std::sqrt(t * t + eps);
                grad.at(r + 1, c) += g;
                grad.at(r, c) -= g;
            }
        }
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

Image iterative_reconstruct(const MeasurementSet& set, const DesignSpace& space,
                            const IterativeConfig& cfg) {
    require(cfg.steps >= 0, "iterative_reconstruct: steps must be >= 0");
    require(cfg.tv_weight >= 0.0, "iterative_reconstruct: tv weight must be >= 0");
    const int d = space.op.image_size;
    const double tv_eps = 1e-8;

    Image x(d, 0.0);
    switch (cfg.init) {
        case IterativeConfig::Init::Zeros: break;
        case IterativeConfig::Init::Fbp: x = fbp(set, space, d); break;
        case IterativeConfig::Init::Given:
            require(cfg.init_image.size == d, "iterative_reconstruct: init image size mismatch");
            x = cfg.init_image;
            break;
    }

    const bool sig = cfg.link == IterativeConfig::Link::Sigmoid;
    Image z(d, 0.0);
    if (sig) {
        for (std::size_t i = 0; i < z.pixels.size(); ++i) {
            const double p = std::min(1.0 - 1e-3, std::max(1e-3, x.pixels[i]));
            z.pixels[i] = logit(p);
        }
        for (std::size_t i = 0; i < x.pixels.size(); ++i) x.pixels[i] = sigmoid(z.pixels[i]);
    }
    if (cfg.steps == 0) return sig ? x : x;

    DataTerm term(set, space, cfg.prescan_weight);
    double step = cfg.step_size;
    if (step <= 0.0) {
        double lip = set.empty() && !term.has_prescan() ? 1.0 : term.lipschitz();
        // smoothed-TV curvature bound; the sigmoid link only shrinks gradients
        lip += cfg.tv_weight * 8.0 / std::sqrt(tv_eps);
        step = 1.0 / lip;
    }

    for (int it = 0; it < cfg.steps; ++it) {
        Image grad(d, 0.0);
        term.add_grad(x, 1.0, grad);
        if (cfg.tv_weight > 0.0) tv_add_grad(x, cfg.tv_weight, grad, tv_eps);

        double gnorm = 0.0;
        if (sig) {
            for (std::size_t i = 0; i < z.pixels.size(); ++i) {
                const double s = x.pixels[i];
                const double gz = grad.pixels[i] * s * (1.0 - s);
                z.pixels[i] -= step * gz;
                x.pixels[i] = sigmoid(z.pixels[i]);
                gnorm += gz * gz;
            }
        } else {
            for (std::size_t i = 0; i < x.pixels.size(); ++i) {
                x.pixels[i] -= step * grad.pixels[i];
                gnorm += grad.pixels[i] * grad.pixels[i];
            }
        }
        if (!std::isfinite(gnorm) || !x.finite()) {
            fail("iterative_reconstruct: non-finite loss at step " + std::to_string(it + 1));
        }
    }
    return x;
}

}  // namespace dal
