#pragma once

#include <cmath>
#include <vector>

#include "dal/common.hpp"

namespace dal {

// Square d x d grayscale image, row-major. Ground-truth images live in
// [0, 1]; intermediate diffusion states may exceed that range.
struct Image {
    int size = 0;
    std::vector<double> pixels;

    Image() = default;
    explicit Image(int d, double fill = 0.0) : size(d), pixels(static_cast<std::size_t>(d) * d, fill) {
        require(d >= 1, "Image: size must be >= 1");
    }

    double& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * size + c]; }
    double at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * size + c]; }

    std::size_t count() const { return pixels.size(); }

    bool finite() const {
        for (double v : pixels)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline void require_finite(const Image& img, const char* what) {
    require(img.finite(), std::string(what) + ": non-finite pixels");
}

inline double dot(const Image& a, const Image& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) s += a.pixels[i] * b.pixels[i];
    return s;
}

inline double norm2(const Image& a) { return std::sqrt(dot(a, a)); }

inline Image operator+(const Image& a, const Image& b) {
    Image out = a;
    for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] += b.pixels[i];
    return out;
}

inline Image operator-(const Image& a, const Image& b) {
    Image out = a;
    for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] -= b.pixels[i];
    return out;
}

inline Image operator*(double s, const Image& a) {
    Image out = a;
    for (double& v : out.pixels) v *= s;
    return out;
}

inline Image image_mean(const std::vector<Image>& imgs) {
    require(!imgs.empty(), "image_mean: empty list");
    Image out(imgs[0].size, 0.0);
    for (const Image& im : imgs) {
        require(im.size == out.size, "image_mean: size mismatch");
        for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] += im.pixels[i];
    }
    const double inv = 1.0 / static_cast<double>(imgs.size());
    for (double& v : out.pixels) v *= inv;
    return out;
}

std::uint64_t image_hash(const Image& img);

// Bilinear sample with zero outside the grid; r, c in pixel coordinates.
double bilinear_sample(const Image& img, double r, double c);

// Rotate about the image center by `deg` degrees (bilinear, zero fill).
Image rotate_image(const Image& img, double deg);

// Up/down scale about the center by `factor` >= 1 followed by center crop.
Image scale_crop(const Image& img, double factor);

// Block-average downsample; size must be divisible by factor.
Image block_downsample(const Image& img, int factor);

// Adjoint of block_downsample: replicate each low-res pixel over its block,
// scaled by 1/factor^2.
Image block_upsample_adjoint(const Image& lowres, int factor);

// Bilinear resample to a new square size.
Image resize_bilinear(const Image& img, int new_size);

}  // namespace dal
