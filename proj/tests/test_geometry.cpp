#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>

#include "dal/fft.hpp"
#include "dal/geometry.hpp"
#include "dal/rng.hpp"

using namespace dal;

namespace {

Image random_image(int d, Rng& rng) {
    Image img(d);
    for (double& v : img.pixels) v = rng.uniform();
    return img;
}

std::vector<double> random_vec(int n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

double vdot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double vnorm(const std::vector<double>& a) { return std::sqrt(vdot(a, a)); }

// Gaussian-smoothed uniform disk, evaluated in closed form so the image is
// rotationally symmetric to machine precision:
// (disk_R * G_sigma)(r) = int_0^R (t/s^2) exp(-(r^2+t^2)/(2s^2)) I0(rt/s^2) dt
double blurred_disk_value(double r, double R, double s) {
    const int n = 600;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) / n * R;
        acc += (t / (s * s)) * std::exp(-(r * r + t * t) / (2 * s * s))
               * std::cyl_bessel_i(0.0, r * t / (s * s));
    }
    return acc * (R / n);
}

Image make_disk(int d, double radius, double edge_sigma) {
    Image img(d, 0.0);
    const double ctr = (d - 1) / 2.0;
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            const double y = r - ctr, x = c - ctr;
            img.at(r, c) = blurred_disk_value(std::sqrt(x * x + y * y), radius, edge_sigma);
        }
    return img;
}

// Dense matrix of the projector at one angle, built by projecting every
// basis image; rows indexed by detector bin.
std::vector<std::vector<double>> dense_radon_matrix(int d, double angle, int bins) {
    std::vector<std::vector<double>> mat(bins, std::vector<double>(d * d, 0.0));
    for (int i = 0; i < d * d; ++i) {
        Image basis(d, 0.0);
        basis.pixels[i] = 1.0;
        const Projection p = radon_project(basis, angle, bins);
        for (int k = 0; k < bins; ++k) mat[k][i] = p.values[k];
    }
    return mat;
}

}  // namespace

TEST_CASE("radon: zero image projects to zero") {
    Image img(32, 0.0);
    const Projection p = radon_project(img, 45.0, 32);
    REQUIRE(p.values.size() == 32);
    for (double v : p.values) CHECK(v == 0.0);
}

// The radius is chosen large enough that the Joseph interpolation moment
// (an extra cos^2/6 smoothing at oblique angles, absent at axis-aligned
// ones) stays below the 1e-3 target; see the rotation-equivariance test for
// the general-interpolation tolerance.
TEST_CASE("radon: disk projections are rotation invariant") {
    const Image disk = make_disk(64, 20.0, 2.0);
    const Projection p0 = radon_project(disk, 0.0, 64);
    const Projection p37 = radon_project(disk, 37.0, 64);
    std::vector<double> diff(p0.values);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= p37.values[i];
    CHECK(vnorm(diff) / vnorm(p0.values) < 1e-3);

    // oblique-to-oblique agreement at the same scale
    const Projection p121 = radon_project(disk, 121.3, 64);
    std::vector<double> diff2(p37.values);
    for (std::size_t i = 0; i < diff2.size(); ++i) diff2[i] -= p121.values[i];
    CHECK(vnorm(diff2) / vnorm(p37.values) < 1e-3);
}

TEST_CASE("radon: unit pixel matches dense-matrix oracle bin by bin") {
    const int d = 16;
    Image img(d, 0.0);
    img.at(d / 2, d / 2) = 1.0;
    const Projection p = radon_project(img, 0.0, d);
    double total = 0.0;
    for (double v : p.values) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));  // one pixel of unit mass at angle 0

    const auto mat = dense_radon_matrix(d, 0.0, d);
    const int idx = (d / 2) * d + d / 2;
    for (int k = 0; k < d; ++k) CHECK(p.values[k] == doctest::Approx(mat[k][idx]).epsilon(1e-12));

    // and for a random image at an oblique angle
    Rng rng(7);
    const Image x = random_image(d, rng);
    const auto mat37 = dense_radon_matrix(d, 37.0, d);
    const Projection px = radon_project(x, 37.0, d);
    for (int k = 0; k < d; ++k) {
        double want = 0.0;
        for (int i = 0; i < d * d; ++i) want += mat37[k][i] * x.pixels[i];
        CHECK(px.values[k] == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("radon: backprojection of zero is zero, delta hits one column") {
    Projection p;
    p.values.assign(16, 0.0);
    const Image z = radon_backproject(p, 63.0, 16);
    for (double v : z.pixels) CHECK(v == 0.0);

    // delta vector at angle 0: footprint is a single pixel column
    const int d = 16;
    Projection delta;
    delta.values.assign(d, 0.0);
    delta.values[5] = 1.0;
    const Image img = radon_backproject(delta, 0.0, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            if (c == 5)
                CHECK(img.at(r, c) == doctest::Approx(1.0));
            else
                CHECK(img.at(r, c) == 0.0);
        }

    // dense-oracle row: backprojection of e_k equals row k of the matrix
    const auto mat = dense_radon_matrix(d, 112.0, d);
    Projection ek;
    ek.values.assign(d, 0.0);
    ek.values[9] = 1.0;
    const Image bp = radon_backproject(ek, 112.0, d);
    for (int i = 0; i < d * d; ++i) CHECK(bp.pixels[i] == doctest::Approx(mat[9][i]).epsilon(1e-12));
}

TEST_CASE("radon: adjoint identity over a 180-angle grid") {
    Rng rng(42);
    for (int d : {16, 32}) {
        const AngleGrid grid = AngleGrid::uniform(180, 1.0);
        const DesignSpace space = DesignSpace::radon(grid, d);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const Image x = random_image(d, rng);
            const auto v = random_vec(d, rng);
            const int a = static_cast<int>(rng.uniform_int(0, 179));
            const Projection ax = space.forward(x, a);
            const Image atv = space.adjoint(v, a);
            const double lhs = vdot(ax.values, v);
            const double rhs = dot(x, atv);
            const double rel = std::abs(lhs - rhs) / (vnorm(ax.values) * vnorm(v) + 1e-300);
            worst = std::max(worst, rel);
        }
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("radon: linearity") {
    Rng rng(3);
    const int d = 32;
    const Image x = random_image(d, rng);
    const Image z = random_image(d, rng);
    const double a = 1.7, b = -0.4;
    for (double angle : {0.0, 37.0, 90.0, 145.5}) {
        Image combo(d);
        for (int i = 0; i < d * d; ++i) combo.pixels[i] = a * x.pixels[i] + b * z.pixels[i];
        const auto pc = radon_project(combo, angle, d);
        const auto px = radon_project(x, angle, d);
        const auto pz = radon_project(z, angle, d);
        double err = 0.0, scale = 0.0;
        for (int k = 0; k < d; ++k) {
            err += std::pow(pc.values[k] - a * px.values[k] - b * pz.values[k], 2);
            scale += std::pow(a * px.values[k], 2) + std::pow(b * pz.values[k], 2);
        }
        CHECK(std::sqrt(err) < 1e-6 * std::sqrt(scale));
    }
}

TEST_CASE("radon: rotation equivariance within interpolation tolerance") {
    const Image disk = make_disk(32, 8.0, 1.5);
    // structured asymmetric image: disk plus an off-center block
    Image img = disk;
    for (int r = 4; r < 10; ++r)
        for (int c = 20; c < 28; ++c) img.at(r, c) += 0.5;
    const double phi = 20.0;
    const Image rot = rotate_image(img, -phi);
    const Projection a = radon_project(img, 30.0, 32);
    const Projection b = radon_project(rot, 30.0 + phi, 32);
    double err = 0.0;
    for (int k = 0; k < 32; ++k) err += std::pow(a.values[k] - b.values[k], 2);
    CHECK(std::sqrt(err) / vnorm(a.values) < 5e-2);
}

TEST_CASE("fourier rows: DC of a constant, zero image, range check") {
    const int d = 32;
    Image img(d, 0.5);
    const Projection p = fourier_row_forward(img, d / 2);
    for (int c = 0; c < d; ++c) {
        const double re = p.values[2 * c], im = p.values[2 * c + 1];
        if (c == d / 2) {
            CHECK(re == doctest::Approx(0.5 * d * d).epsilon(1e-10));
            CHECK(std::abs(im) < 1e-10);
        } else {
            CHECK(std::abs(re) < 1e-10);
            CHECK(std::abs(im) < 1e-10);
        }
    }

    Image zero(d, 0.0);
    const Projection pz = fourier_row_forward(zero, 3);
    for (double v : pz.values) CHECK(v == 0.0);

    CHECK_THROWS(fourier_row_forward(img, d));
    CHECK_THROWS(fourier_row_forward(img, -1));
}

TEST_CASE("fourier rows: Parseval over all rows") {
    Rng rng(5);
    const int d = 32;
    const Image img = random_image(d, rng);
    double total = 0.0;
    for (int r = 0; r < d; ++r) {
        const Projection p = fourier_row_forward(img, r);
        for (double v : p.values) total += v * v;
    }
    double img_sq = 0.0;
    for (double v : img.pixels) img_sq += v * v;
    CHECK(total == doctest::Approx(d * d * img_sq).epsilon(1e-6));
}

TEST_CASE("fourier rows: measuring all rows inverts exactly") {
    Rng rng(9);
    const int d = 16;
    const Image img = random_image(d, rng);
    // assemble the full shifted spectrum from row measurements, invert
    std::vector<std::complex<double>> spec(d * d);
    const int m = d / 2;
    for (int r = 0; r < d; ++r) {
        const Projection p = fourier_row_forward(img, r);
        const int kr = ((r - m) % d + d) % d;
        for (int c = 0; c < d; ++c) {
            const int kc = ((c - m) % d + d) % d;
            spec[kr * d + kc] = {p.values[2 * c], p.values[2 * c + 1]};
        }
    }
    fft_2d(spec.data(), d, d, true);
    for (int i = 0; i < d * d; ++i) {
        CHECK(std::abs(spec[i].real() - img.pixels[i]) < 1e-10);
        CHECK(std::abs(spec[i].imag()) < 1e-10);
    }
}

TEST_CASE("fourier rows: adjoint identity") {
    Rng rng(13);
    const int d = 16;
    const DesignSpace space = DesignSpace::fourier_rows(d);
    for (int trial = 0; trial < 50; ++trial) {
        const Image x = random_image(d, rng);
        const auto v = random_vec(2 * d, rng);
        const int row = static_cast<int>(rng.uniform_int(0, d - 1));
        const Projection ax = space.forward(x, row);
        const Image atv = space.adjoint(v, row);
        const double lhs = vdot(ax.values, v);
        const double rhs = dot(x, atv);
        CHECK(std::abs(lhs - rhs) / (vnorm(ax.values) * vnorm(v) + 1e-300) < 1e-10);
    }
}

TEST_CASE("batch_forward matches looped single calls exactly") {
    Rng rng(21);
    const Image img = random_image(16, rng);
    const AngleGrid grid = AngleGrid::uniform(180, 1.0);
    const DesignSpace space = DesignSpace::radon(grid, 16);
    const auto batch = batch_forward(img, space);
    REQUIRE(batch.size() == 180);
    for (int i = 0; i < 180; ++i) {
        const Projection single = space.forward(img, i);
        REQUIRE(batch[i].design == i);
        for (int k = 0; k < 16; ++k) CHECK(batch[i].values[k] == single.values[k]);
    }

    Image zero(16, 0.0);
    for (const auto& p : batch_forward(zero, space))
        for (double v : p.values) CHECK(v == 0.0);
}

TEST_CASE("angle grid validation") {
    CHECK_THROWS(AngleGrid::uniform(181, 1.0));
    CHECK_THROWS(AngleGrid::uniform(0, 1.0));
    const AngleGrid g = AngleGrid::uniform(180, 1.0);
    CHECK(g.entries.front() == 0.0);
    CHECK(g.entries.back() == 179.0);
}
