#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dal/reconstruct.hpp"
#include "test_util.hpp"

using namespace dal;
using namespace dal::testutil;

namespace {

MeasurementSet scan(const Image& truth, const DesignSpace& space, const std::vector<int>& designs) {
    MeasurementSet set;
    for (int d : designs) set = add_measurement(set, d, space.forward(truth, d));
    return set;
}

std::vector<int> all_designs(const DesignSpace& space) {
    std::vector<int> v(space.size());
    for (int i = 0; i < space.size(); ++i) v[i] = i;
    return v;
}

}  // namespace

TEST_CASE("metrics: identity, constant offset, oracle recomputation") {
    Rng rng(1);
    const Image truth = random_image(32, rng);
    const Metrics ident = compute_metrics(truth, truth);
    CHECK(ident.psnr == 99.0);
    CHECK(ident.rmse == 0.0);
    CHECK(ident.ssim == doctest::Approx(1.0));

    Image offset = truth;
    for (double& v : offset.pixels) v += 0.1;
    const Metrics off = compute_metrics(offset, truth);
    CHECK(off.psnr == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(off.rmse == doctest::Approx(0.1).epsilon(1e-12));

    const Image est = random_image(32, rng);
    const Metrics m = compute_metrics(est, truth);
    double se = 0.0;
    for (std::size_t i = 0; i < est.pixels.size(); ++i)
        se += (est.pixels[i] - truth.pixels[i]) * (est.pixels[i] - truth.pixels[i]);
    const double mse = se / est.pixels.size();
    CHECK(m.rmse == doctest::Approx(std::sqrt(mse)).epsilon(1e-9));
    CHECK(m.psnr == doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-9));

    CHECK_THROWS(compute_metrics(Image(16), truth));
}

TEST_CASE("metrics: psnr and rmse are monotonically related") {
    Rng rng(2);
    const Image truth = random_image(16, rng);
    std::vector<Metrics> ms;
    for (int i = 0; i < 20; ++i) {
        Image est = truth;
        const double amp = rng.uniform(0.001, 0.3);
        for (double& v : est.pixels) v += rng.uniform(-amp, amp);
        ms.push_back(compute_metrics(est, truth));
    }
    for (const auto& a : ms)
        for (const auto& b : ms)
            if (a.rmse < b.rmse) CHECK(a.psnr > b.psnr);
}

TEST_CASE("fbp reconstructs a disk phantom at full angular sampling") {
    const int d = 64;
    const Image truth = make_disk(d, 20.0, 1.5);
    const DesignSpace space = DesignSpace::radon(AngleGrid::uniform(180, 1.0), d);
    const MeasurementSet set = scan(truth, space, all_designs(space));
    const Image rec = fbp(set, space, d);
    const Metrics m = compute_metrics(rec, truth);
    CHECK(m.psnr >= 25.0);
}

TEST_CASE("fbp of a single angle-0 projection is constant per column") {
    Rng rng(3);
    const int d = 16;
    const Image truth = random_image(d, rng);
    const DesignSpace space = DesignSpace::radon(AngleGrid::uniform(180, 1.0), d);
    const MeasurementSet set = scan(truth, space, {0});
    const Image rec = fbp(set, space, d);
    for (int c = 0; c < d; ++c)
        for (int r = 1; r < d; ++r) CHECK(rec.at(r, c) == doctest::Approx(rec.at(0, c)).epsilon(1e-12));
}

TEST_CASE("fbp is linear in the measurements; zero data gives zero image") {
    Rng rng(4);
    const int d = 16;
    const DesignSpace space = DesignSpace::radon(AngleGrid::uniform(60, 3.0), d);
    const Image x1 = random_image(d, rng), x2 = random_image(d, rng);
    const std::vector<int> designs = {0, 10, 25, 40, 59};
    const MeasurementSet s1 = scan(x1, space, designs);
    const MeasurementSet s2 = scan(x2, space, designs);
    const double a = 1.3, b = -0.7;
    MeasurementSet combo;
    for (std::size_t i = 0; i < designs.size(); ++i) {
        Projection p = s1.entries[i].proj;
        for (std::size_t k = 0; k < p.values.size(); ++k)
            p.values[k] = a * p.values[k] + b * s2.entries[i].proj.values[k];
        combo = add_measurement(combo, designs[i], p);
    }
    const Image f1 = fbp(s1, space, d), f2 = fbp(s2, space, d), fc = fbp(combo, space, d);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < fc.pixels.size(); ++i) {
        err += std::pow(fc.pixels[i] - a * f1.pixels[i] - b * f2.pixels[i], 2);
        scale += std::pow(a * f1.pixels[i], 2) + std::pow(b * f2.pixels[i], 2);
    }
    CHECK(std::sqrt(err) <= 1e-6 * std::sqrt(scale) + 1e-300);

    MeasurementSet zeros;
    for (int dd : designs) {
        Projection p;
        p.values.assign(d, 0.0);
        zeros = add_measurement(zeros, dd, p);
    }
    for (double v : fbp(zeros, space, d).pixels) CHECK(v == 0.0);

    CHECK_THROWS(fbp(MeasurementSet{}, space, d));
    const DesignSpace mri = DesignSpace::fourier_rows(d);
    const MeasurementSet mset = scan(x1, mri, {3});
    CHECK_THROWS(fbp(mset, mri, d));
}

TEST_CASE("iterative: steps=0 returns the initialization unchanged") {
    Rng rng(5);
    const int d = 16;
    const Image truth = random_image(d, rng);
    const DesignSpace space = DesignSpace::radon(AngleGrid::uniform(180, 1.0), d);
    const MeasurementSet set = scan(truth, space, {0, 30, 90});
    IterativeConfig cfg;
    cfg.steps = 0;
    cfg.init = IterativeConfig::Init::Given;
    cfg.init_image = random_image(d, rng);
    const Image out = iterative_reconstruct(set, space, cfg);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) CHECK(out.pixels[i] == cfg.init_image.pixels[i]);
}

TEST_CASE("iterative: overdetermined noiseless data reaches small residual") {
    Rng rng(6);
    const int d = 16;
    const Image truth = random_image(d, rng);
    const DesignSpace space = DesignSpace::radon(AngleGrid::uniform(180, 1.0), d);
    const MeasurementSet set = scan(truth, space, all_designs(space));
    IterativeConfig cfg;
    cfg.steps = 3000;
    const Image rec = iterative_reconstruct(set, space, cfg);
    DataTerm term(set, space, 0.0);
    const double rel = std::sqrt(term.loss(rec) / term.data_norm_sq());
    CHECK(rel < 1e-3);
}

TEST_CASE("iterative: sigmoid link keeps every pixel strictly inside (0,1)") {
    Rng rng(7);
    const int d = 16;
    const Image truth = random_image(d, rng);
    const DesignSpace space = DesignSpace::radon(AngleGrid::uniform(180, 1.0), d);
    const MeasurementSet set = scan(truth, space, {0, 45, 90, 135});
    IterativeConfig cfg;
    cfg.steps = 100;
    cfg.link = IterativeConfig::Link::Sigmoid;
    const Image rec = iterative_reconstruct(set, space, cfg);
    for (double v : rec.pixels) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("iterative: loss is monotone for step sizes below 1/L") {
    Rng master(8);
    const int d = 12;
    for (int inst = 0; inst < 10; ++inst) {
        Rng rng(master.next_u64());
        const Image truth = random_image(d, rng);
        const DesignSpace space = DesignSpace::radon(AngleGrid::uniform(20, 9.0), d);
        std::vector<int> designs;
        for (int i = 0; i < 6; ++i) designs.push_back(static_cast<int>(rng.uniform_int(0, 19)));
        std::sort(designs.begin(), designs.end());
        designs.erase(std::unique(designs.begin(), designs.end()), designs.end());
        const MeasurementSet set = scan(truth, space, designs);
        DataTerm term(set, space, 0.0);

        IterativeConfig cfg;
        cfg.init = IterativeConfig::Init::Given;
        cfg.init_image = random_image(d, rng);
        double prev = term.loss(cfg.init_image);
        for (int steps = 1; steps <= 8; ++steps) {
            cfg.steps = steps;
            const double cur = term.loss(iterative_reconstruct(set, space, cfg));
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
    }
}

TEST_CASE("iterative: divergence raises an error naming the step") {
    Rng rng(9);
    const int d = 8;
    const Image truth = random_image(d, rng);
    const DesignSpace space = DesignSpace::radon(AngleGrid::uniform(180, 1.0), d);
    const MeasurementSet set = scan(truth, space, all_designs(space));
    IterativeConfig cfg;
    cfg.steps = 500;
    cfg.step_size = 10.0;  // far above 1/L
    CHECK_THROWS_AS(iterative_reconstruct(set, space, cfg), Error);
}

TEST_CASE("data term gradients match finite differences") {
    Rng rng(10);
    const int d = 8;
    const Image truth = random_image(d, rng);
    const DesignSpace space = DesignSpace::radon(AngleGrid::uniform(180, 1.0), d);
    MeasurementSet set = scan(truth, space, {0, 37, 121});
    set.prescan = prescan_measure(truth, 2, NoiseModel::none(), 3);
    DataTerm term(set, space, 0.7);

    const Image x = random_image(d, rng);
    Image grad(d, 0.0);
    term.add_grad(x, 1.0, grad);
    const double h = 1e-6;
    for (int t = 0; t < 20; ++t) {
        const int i = static_cast<int>(rng.uniform_int(0, d * d - 1));
        Image xp = x, xm = x;
        xp.pixels[i] += h;
        xm.pixels[i] -= h;
        const double fd = (term.loss(xp) - term.loss(xm)) / (2 * h);
        CHECK(grad.pixels[i] == doctest::Approx(fd).epsilon(1e-5));
    }
}
