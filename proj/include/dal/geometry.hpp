#pragma once

#include <vector>

#include "dal/image.hpp"

namespace dal {

// Discrete design space of projection angles, {i * delta} for i = 0..count-1.
struct AngleGrid {
    int count = 0;
    double delta_deg = 0.0;
    std::vector<double> entries;

    static AngleGrid uniform(int count, double delta_deg);
};

enum class OperatorKind { Radon, FourierRowMask };

struct ForwardOperator {
    OperatorKind kind = OperatorKind::Radon;
    int image_size = 0;     // d
    int detector_bins = 0;  // l (Radon); d complex bins for FourierRowMask
};

// One measured (or simulated) projection. Radon projections hold
// detector_bins reals; Fourier rows hold d complex values interleaved
// (re0, im0, re1, im1, ...).
struct Projection {
    int design = -1;  // index into the owning design space
    std::vector<double> values;
};

// Joseph-style linear-interpolation ray-driven Radon transform. Rays march
// the dominant axis in unit steps; the adjoint transposes the interpolation
// weights exactly. Angles in degrees, [0, 180).
Projection radon_project(const Image& img, double angle_deg, int bins);
Image radon_backproject(const Projection& p, double angle_deg, int image_size);
Image radon_backproject(const std::vector<double>& values, double angle_deg, int image_size);

// Row `row` of the centered 2-D DFT of img; rows are indexed in the shifted
// spectrum so row d/2 is DC. Forward transform is unnormalized.
Projection fourier_row_forward(const Image& img, int row);
// Exact adjoint of fourier_row_forward under the real inner product on the
// interleaved representation.
Image fourier_row_adjoint(const std::vector<double>& values, int row, int image_size);

// A forward operator together with its candidate designs (angle degrees for
// Radon, k-space row indices for FourierRowMask). Immutable after
// construction and safe to share across threads.
struct DesignSpace {
    ForwardOperator op;
    std::vector<double> designs;

    static DesignSpace radon(const AngleGrid& grid, int image_size, int bins = 0);
    static DesignSpace fourier_rows(int image_size);

    int size() const { return static_cast<int>(designs.size()); }
    int values_per_projection() const {
        return op.kind == OperatorKind::Radon ? op.detector_bins : 2 * op.image_size;
    }
    bool valid_design(int idx) const { return idx >= 0 && idx < size(); }

    Projection forward(const Image& img, int design_index) const;
    Image adjoint(const std::vector<double>& values, int design_index) const;
    Image adjoint(const Projection& p) const;
};

// Applies the forward operator at every design; element i is bit-identical
// to forward(img, i).
std::vector<Projection> batch_forward(const Image& img, const DesignSpace& space);

}  // namespace dal
