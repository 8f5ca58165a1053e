#include "dal/measurement.hpp"

namespace dal {

NoiseModel NoiseModel::gaussian(double sigma) {
    require(sigma >= 0.0, "NoiseModel: sigma must be >= 0");
    NoiseModel m;
    m.kind = Kind::Gaussian;
    m.sigma = sigma;
    return m;
}

NoiseModel NoiseModel::poisson(double i0) {
    require(i0 > 0.0, "NoiseModel: photon count must be positive");
    NoiseModel m;
    m.kind = Kind::Poisson;
    m.photon_count = i0;
    return m;
}

bool MeasurementSet::contains(int design) const {
    for (const Entry& e : entries)
        if (e.design == design) return true;
    return false;
}

std::vector<char> MeasurementSet::measured_mask(int design_count) const {
    std::vector<char> mask(design_count, 0);
    for (const Entry& e : entries) {
        require(e.design >= 0 && e.design < design_count, "MeasurementSet: design outside space");
        mask[e.design] = 1;
    }
    return mask;
}

std::uint64_t MeasurementSet::hash() const {
    std::uint64_t h = fnv1a("measurement-set");
    for (const Entry& e : entries) {
        h = fnv1a(&e.design, sizeof(e.design), h);
        h = fnv1a(&e.step, sizeof(e.step), h);
        h = fnv1a(e.proj.values.data(), e.proj.values.size() * sizeof(double), h);
    }
    if (prescan) {
        h = fnv1a(&prescan->factor, sizeof(prescan->factor), h);
        h = fnv1a(prescan->image_lowres.pixels.data(),
                  prescan->image_lowres.pixels.size() * sizeof(double), h);
    }
    return h;
}

namespace {

void apply_noise(std::vector<double>& values, const NoiseModel& noise, Rng& rng,
                 OperatorKind kind) {
    switch (noise.kind) {
        case NoiseModel::Kind::None:
            return;
        case NoiseModel::Kind::Gaussian:
            for (double& v : values) v += rng.normal(0.0, noise.sigma);
            return;
        case NoiseModel::Kind::Poisson: {
            require(kind == OperatorKind::Radon,
                    "NoiseModel: Poisson counting applies to line-integral (Radon) data only");
            const double i0 = noise.photon_count;
            for (double& v : values) {
                const double expected = i0 * std::exp(-v);
                const double counts = std::max<double>(1.0, static_cast<double>(rng.poisson(expected)));
                v = -std::log(counts / i0);
            }
            return;
        }
    }
}

}  // namespace

Projection measure(const Image& truth, int design, const DesignSpace& space,
                   const NoiseModel& noise, std::uint64_t seed) {
    require(space.valid_design(design), "measure: invalid design");
    Projection p = space.forward(truth, design);
    Rng rng(derive_seed(seed, {fnv1a("measure"), static_cast<std::uint64_t>(design)}));
    apply_noise(p.values, noise, rng, space.op.kind);
    return p;
}

PreScan prescan_measure(const Image& truth, int factor, const NoiseModel& noise,
                        std::uint64_t seed) {
    require(factor >= 2, "prescan_measure: factor must be >= 2");
    require(truth.size % factor == 0, "prescan_measure: image size not divisible by factor");
    PreScan ps;
    ps.factor = factor;
    ps.noise = noise;
    ps.image_lowres = block_downsample(truth, factor);
    Rng rng(derive_seed(seed, fnv1a("prescan")));
    apply_noise(ps.image_lowres.pixels, noise, rng, OperatorKind::Radon);
    return ps;
}

MeasurementSet add_measurement(const MeasurementSet& set, int design, const Projection& proj) {
    require(!set.contains(design), "add_measurement: duplicate design " + std::to_string(design));
    MeasurementSet out = set;
    int max_step = 0;
    for (const auto& e : set.entries) max_step = std::max(max_step, e.step);
    MeasurementSet::Entry e;
    e.design = design;
    e.proj = proj;
    e.proj.design = design;
    e.step = max_step + 1;
    out.entries.push_back(std::move(e));
    return out;
}

}  // namespace dal
