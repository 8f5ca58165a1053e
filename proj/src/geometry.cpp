#include "dal/geometry.hpp"

#include <complex>

#include "dal/fft.hpp"
#include "dal/parallel.hpp"

namespace dal {

AngleGrid AngleGrid::uniform(int count, double delta_deg) {
    require(count >= 1, "AngleGrid: count must be >= 1");
    require(delta_deg > 0.0, "AngleGrid: delta must be positive");
    require(count * delta_deg <= 180.0 + 1e-9, "AngleGrid: N*delta exceeds 180 degrees");
    AngleGrid g;
    g.count = count;
    g.delta_deg = delta_deg;
    g.entries.resize(count);
    for (int i = 0; i < count; ++i) g.entries[i] = i * delta_deg;
    return g;
}

namespace {

struct RadonGeom {
    double sin_t, cos_t;
    bool row_march;   // true when |cos| >= |sin|: march rows, interpolate columns
    double weight;    // ray length per unit step along the marching axis
    double ds;        // detector bin spacing
    double ctr;       // (d-1)/2
    double s0;        // first bin position
};

RadonGeom radon_geom(double angle_deg, int d, int bins) {
    require(angle_deg >= 0.0 && angle_deg < 180.0, "radon: angle must lie in [0, 180)");
    require(bins >= 1, "radon: bins must be >= 1");
    RadonGeom g;
    const double rad = angle_deg * M_PI / 180.0;
    g.sin_t = std::sin(rad);
    g.cos_t = std::cos(rad);
    g.row_march = std::abs(g.cos_t) >= std::abs(g.sin_t);
    g.weight = 1.0 / (g.row_march ? std::abs(g.cos_t) : std::abs(g.sin_t));
    g.ds = static_cast<double>(d) / bins;
    g.ctr = (d - 1) / 2.0;
    g.s0 = -(bins - 1) / 2.0 * g.ds;
    return g;
}

}  // namespace

Projection radon_project(const Image& img, double angle_deg, int bins) {
    require_finite(img, "radon_project");
    const int d = img.size;
    const RadonGeom g = radon_geom(angle_deg, d, bins);
    Projection p;
    p.values.assign(bins, 0.0);
    for (int k = 0; k < bins; ++k) {
        const double s = g.s0 + k * g.ds;
        double acc = 0.0;
        if (g.row_march) {
            // ray: x*cos + y*sin = s, sample x at each row y
            for (int r = 0; r < d; ++r) {
                const double y = r - g.ctr;
                const double x = (s - y * g.sin_t) / g.cos_t;
                const double c = x + g.ctr;
                const int c0 = static_cast<int>(std::floor(c));
                const double w = c - c0;
                if (c0 >= 0 && c0 < d) acc += (1.0 - w) * img.at(r, c0);
                if (c0 + 1 >= 0 && c0 + 1 < d) acc += w * img.at(r, c0 + 1);
            }
        } else {
            for (int c = 0; c < d; ++c) {
                const double x = c - g.ctr;
                const double y = (s - x * g.cos_t) / g.sin_t;
                const double r = y + g.ctr;
                const int r0 = static_cast<int>(std::floor(r));
                const double w = r - r0;
                if (r0 >= 0 && r0 < d) acc += (1.0 - w) * img.at(r0, c);
                if (r0 + 1 >= 0 && r0 + 1 < d) acc += w * img.at(r0 + 1, c);
            }
        }
        p.values[k] = acc * g.weight;
    }
    return p;
}

Image radon_backproject(const std::vector<double>& values, double angle_deg, int image_size) {
    const int d = image_size;
    const int bins = static_cast<int>(values.size());
    const RadonGeom g = radon_geom(angle_deg, d, bins);
    Image out(d, 0.0);
    for (int k = 0; k < bins; ++k) {
        const double v = values[k] * g.weight;
        if (v == 0.0) continue;
        const double s = g.s0 + k * g.ds;
        if (g.row_march) {
            for (int r = 0; r < d; ++r) {
                const double y = r - g.ctr;
                const double c = (s - y * g.sin_t) / g.cos_t + g.ctr;
                const int c0 = static_cast<int>(std::floor(c));
                const double w = c - c0;
                if (c0 >= 0 && c0 < d) out.at(r, c0) += (1.0 - w) * v;
                if (c0 + 1 >= 0 && c0 + 1 < d) out.at(r, c0 + 1) += w * v;
            }
        } else {
            for (int c = 0; c < d; ++c) {
                const double x = c - g.ctr;
                const double r = (s - x * g.cos_t) / g.sin_t + g.ctr;
                const int r0 = static_cast<int>(std::floor(r));
                const double w = r - r0;
                if (r0 >= 0 && r0 < d) out.at(r0, c) += (1.0 - w) * v;
                if (r0 + 1 >= 0 && r0 + 1 < d) out.at(r0 + 1, c) += w * v;
            }
        }
    }
    return out;
}

Image radon_backproject(const Projection& p, double angle_deg, int image_size) {
    for (double v : p.values) require(std::isfinite(v), "radon_backproject: non-finite projection");
    return radon_backproject(p.values, angle_deg, image_size);
}

Projection fourier_row_forward(const Image& img, int row) {
    require_finite(img, "fourier_row_forward");
    const int d = img.size;
    require(row >= 0 && row < d, "fourier_row_forward: row out of range");
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(d) * d);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) spec[i] = img.pixels[i];
    fft_2d(spec.data(), d, d, false);
    const int m = d / 2;
    const int kr = ((row - m) % d + d) % d;
    Projection p;
    p.values.resize(2 * static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) {
        const int kc = ((c - m) % d + d) % d;
        const std::complex<double> v = spec[static_cast<std::size_t>(kr) * d + kc];
        p.values[2 * c] = v.real();
        p.values[2 * c + 1] = v.imag();
    }
    return p;
}

Image fourier_row_adjoint(const std::vector<double>& values, int row, int image_size) {
    const int d = image_size;
    require(row >= 0 && row < d, "fourier_row_adjoint: row out of range");
    require(static_cast<int>(values.size()) == 2 * d, "fourier_row_adjoint: dimension mismatch");
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(d) * d, 0.0);
    const int m = d / 2;
    const int kr = ((row - m) % d + d) % d;
    for (int c = 0; c < d; ++c) {
        const int kc = ((c - m) % d + d) % d;
        spec[static_cast<std::size_t>(kr) * d + kc] = {values[2 * c], values[2 * c + 1]};
    }
    // adjoint of the unnormalized forward DFT = unnormalized inverse
    fft_2d(spec.data(), d, d, true);
    Image out(d, 0.0);
    const double n = static_cast<double>(d) * d;
    for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] = spec[i].real() * n;
    return out;
}

DesignSpace DesignSpace::radon(const AngleGrid& grid, int image_size, int bins) {
    DesignSpace s;
    s.op.kind = OperatorKind::Radon;
    s.op.image_size = image_size;
    s.op.detector_bins = bins > 0 ? bins : image_size;
    s.designs = grid.entries;
    return s;
}

DesignSpace DesignSpace::fourier_rows(int image_size) {
    DesignSpace s;
    s.op.kind = OperatorKind::FourierRowMask;
    s.op.image_size = image_size;
    s.op.detector_bins = image_size;
    s.designs.resize(image_size);
    for (int i = 0; i < image_size; ++i) s.designs[i] = i;
    return s;
}

Projection DesignSpace::forward(const Image& img, int design_index) const {
    require(valid_design(design_index), "DesignSpace::forward: design index out of range");
    require(img.size == op.image_size, "DesignSpace::forward: image size mismatch");
    Projection p;
    if (op.kind == OperatorKind::Radon) {
        p = radon_project(img, designs[design_index], op.detector_bins);
    } else {
        p = fourier_row_forward(img, static_cast<int>(designs[design_index]));
    }
    p.design = design_index;
    return p;
}

Image DesignSpace::adjoint(const std::vector<double>& values, int design_index) const {
    require(valid_design(design_index), "DesignSpace::adjoint: design index out of range");
    if (op.kind == OperatorKind::Radon) {
        require(static_cast<int>(values.size()) == op.detector_bins,
                "DesignSpace::adjoint: dimension mismatch with detector_bins");
        return radon_backproject(values, designs[design_index], op.image_size);
    }
    return fourier_row_adjoint(values, static_cast<int>(designs[design_index]), op.image_size);
}

Image DesignSpace::adjoint(const Projection& p) const { return adjoint(p.values, p.design); }

std::vector<Projection> batch_forward(const Image& img, const DesignSpace& space) {
    std::vector<Projection> out(space.size());
    parallel_for(space.size(), [&](std::int64_t i) {
        out[static_cast<std::size_t>(i)] = space.forward(img, static_cast<int>(i));
    });
    return out;
}

}  // namespace dal
