#include "dal/image.hpp"

namespace dal {

std::uint64_t image_hash(const Image& img) {
    std::uint64_t h = fnv1a(&img.size, sizeof(img.size));
    return fnv1a(img.pixels.data(), img.pixels.size() * sizeof(double), h);
}

double bilinear_sample(const Image& img, double r, double c) {
    const int d = img.size;
    const int r0 = static_cast<int>(std::floor(r));
    const int c0 = static_cast<int>(std::floor(c));
    const double fr = r - r0;
    const double fc = c - c0;
    double acc = 0.0;
    for (int dr = 0; dr <= 1; ++dr) {
        for (int dc = 0; dc <= 1; ++dc) {
            const int rr = r0 + dr;
            const int cc = c0 + dc;
            if (rr < 0 || rr >= d || cc < 0 || cc >= d) continue;
            const double w = (dr ? fr : 1.0 - fr) * (dc ? fc : 1.0 - fc);
            acc += w * img.at(rr, cc);
        }
    }
    return acc;
}

Image rotate_image(const Image& img, double deg) {
    const int d = img.size;
    const double rad = deg * M_PI / 180.0;
    const double cs = std::cos(rad), sn = std::sin(rad);
    const double ctr = (d - 1) / 2.0;
    Image out(d, 0.0);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            // inverse map: rotate target coords by -deg
            const double y = r - ctr, x = c - ctr;
            const double xs = cs * x - sn * y;
            const double ys = sn * x + cs * y;
            out.at(r, c) = bilinear_sample(img, ys + ctr, xs + ctr);
        }
    }
    return out;
}

Image scale_crop(const Image& img, double factor) {
    require(factor >= 1.0, "scale_crop: factor must be >= 1");
    const int d = img.size;
    const double ctr = (d - 1) / 2.0;
    Image out(d, 0.0);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            const double ys = (r - ctr) / factor + ctr;
            const double xs = (c - ctr) / factor + ctr;
            out.at(r, c) = bilinear_sample(img, ys, xs);
        }
    }
    return out;
}

Image block_downsample(const Image& img, int factor) {
    require(factor >= 1, "block_downsample: factor must be >= 1");
    require(img.size % factor == 0, "block_downsample: size not divisible by factor");
    const int dl = img.size / factor;
    Image out(dl, 0.0);
    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    for (int r = 0; r < dl; ++r)
        for (int c = 0; c < dl; ++c) {
            double s = 0.0;
            for (int i = 0; i < factor; ++i)
                for (int j = 0; j < factor; ++j) s += img.at(r * factor + i, c * factor + j);
            out.at(r, c) = s * inv;
        }
    return out;
}

Image block_upsample_adjoint(const Image& lowres, int factor) {
    const int dl = lowres.size;
    Image out(dl * factor, 0.0);
    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    for (int r = 0; r < dl; ++r)
        for (int c = 0; c < dl; ++c) {
            const double v = lowres.at(r, c) * inv;
            for (int i = 0; i < factor; ++i)
                for (int j = 0; j < factor; ++j) out.at(r * factor + i, c * factor + j) = v;
        }
    return out;
}

Image resize_bilinear(const Image& img, int new_size) {
    require(new_size >= 1, "resize_bilinear: bad size");
    const int d = img.size;
    Image out(new_size, 0.0);
    const double scale = static_cast<double>(d) / new_size;
    for (int r = 0; r < new_size; ++r) {
        for (int c = 0; c < new_size; ++c) {
            // align pixel centers
            const double rs = (r + 0.5) * scale - 0.5;
            const double cs = (c + 0.5) * scale - 0.5;
            const double rc = std::min(std::max(rs, 0.0), static_cast<double>(d - 1));
            const double cc = std::min(std::max(cs, 0.0), static_cast<double>(d - 1));
            out.at(r, c) = bilinear_sample(img, rc, cc);
        }
    }
    return out;
}

}  // namespace dal
