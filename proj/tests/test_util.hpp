#pragma once

#include <cmath>
#include <vector>

#include "dal/image.hpp"
#include "dal/rng.hpp"

namespace dal::testutil {

inline Image random_image(int d, Rng& rng) {
    Image img(d);
    for (double& v : img.pixels) v = rng.uniform();
    return img;
}

inline std::vector<double> random_vec(int n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

inline double vdot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double vnorm(const std::vector<double>& a) { return std::sqrt(vdot(a, a)); }

// Gaussian-smoothed uniform disk via the polar convolution integral; exactly
// rotationally symmetric by construction.
inline double blurred_disk_value(double r, double R, double s) {
    const int n = 600;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) / n * R;
        acc += (t / (s * s)) * std::exp(-(r * r + t * t) / (2 * s * s))
               * std::cyl_bessel_i(0.0, r * t / (s * s));
    }
    return acc * (R / n);
}

inline Image make_disk(int d, double radius, double edge_sigma) {
    Image img(d, 0.0);
    const double ctr = (d - 1) / 2.0;
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            const double y = r - ctr, x = c - ctr;
            img.at(r, c) = blurred_disk_value(std::sqrt(x * x + y * y), radius, edge_sigma);
        }
    return img;
}

}  // namespace dal::testutil
