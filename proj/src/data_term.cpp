#include "dal/data_term.hpp"

namespace dal {

DataTerm::DataTerm(const MeasurementSet& set, const DesignSpace& space, double prescan_weight)
    : set_(&set), space_(&space), prescan_weight_(prescan_weight) {
    require(prescan_weight >= 0.0, "DataTerm: prescan weight must be >= 0");
}

bool DataTerm::has_prescan() const { return set_->prescan.has_value() && prescan_weight_ > 0.0; }

double DataTerm::loss_entries(const Image& x, const std::vector<int>& entries) const {
    double total = 0.0;
    for (int idx : entries) {
        const auto& e = set_->entries.at(idx);
        const Projection p = space_->forward(x, e.design);
        for (std::size_t k = 0; k < p.values.size(); ++k) {
            const double r = p.values[k] - e.proj.values[k];
            total += r * r;
        }
    }
    return total;
}

double DataTerm::loss_prescan(const Image& x) const {
    if (!has_prescan()) return 0.0;
    const PreScan& ps = *set_->prescan;
    const Image low = block_downsample(x, ps.factor);
    double total = 0.0;
    for (std::size_t i = 0; i < low.pixels.size(); ++i) {
        const double r = low.pixels[i] - ps.image_lowres.pixels[i];
        total += r * r;
    }
    return prescan_weight_ * total;
}

double DataTerm::loss(const Image& x) const { return loss_entries(x, all_entries()) + loss_prescan(x); }

void DataTerm::add_grad_entries(const Image& x, const std::vector<int>& entries, double scale,
                                Image& grad) const {
    for (int idx : entries) {
        const auto& e = set_->entries.at(idx);
        Projection p = space_->forward(x, e.design);
        for (std::size_t k = 0; k < p.values.size(); ++k) p.values[k] -= e.proj.values[k];
        const Image bp = space_->adjoint(p.values, e.design);
        const double s = 2.0 * scale;
        for (std::size_t i = 0; i < grad.pixels.size(); ++i) grad.pixels[i] += s * bp.pixels[i];
    }
}

void DataTerm::add_grad_prescan(const Image& x, double scale, Image& grad) const {
    if (!has_prescan()) return;
    const PreScan& ps = *set_->prescan;
    Image low = block_downsample(x, ps.factor);
    for (std::size_t i = 0; i < low.pixels.size(); ++i) low.pixels[i] -= ps.image_lowres.pixels[i];
    const Image up = block_upsample_adjoint(low, ps.factor);
    const double s = 2.0 * scale * prescan_weight_;
    for (std::size_t i = 0; i < grad.pixels.size(); ++i) grad.pixels[i] += s * up.pixels[i];
}

void DataTerm::add_grad(const Image& x, double scale, Image& grad) const {
    add_grad_entries(x, all_entries(), scale, grad);
    add_grad_prescan(x, scale, grad);
}

double DataTerm::lipschitz(std::uint64_t seed, int iterations) const {
    const int d = space_->op.image_size;
    Rng rng(derive_seed(seed, fnv1a("lipschitz")));
    Image v(d);
    for (double& p : v.pixels) p = rng.normal();
    double nv = norm2(v);
    if (nv == 0.0) return 1.0;
    for (double& p : v.pixels) p /= nv;

    const auto entries = all_entries();
    double eig = 0.0;
    for (int it = 0; it < iterations; ++it) {
        // Hessian-vector product of the quadratic loss: H v = grad(v) since
        // grad is linear in x for zero measurements; use zero-target trick.
        Image hv(d, 0.0);
        for (int idx : entries) {
            const auto& e = set_->entries[idx];
            const Projection p = space_->forward(v, e.design);
            const Image bp = space_->adjoint(p.values, e.design);
            for (std::size_t i = 0; i < hv.pixels.size(); ++i) hv.pixels[i] += 2.0 * bp.pixels[i];
        }
        if (has_prescan()) {
            const Image low = block_downsample(v, set_->prescan->factor);
            const Image up = block_upsample_adjoint(low, set_->prescan->factor);
            for (std::size_t i = 0; i < hv.pixels.size(); ++i)
                hv.pixels[i] += 2.0 * prescan_weight_ * up.pixels[i];
        }
        eig = norm2(hv);
        if (eig <= 0.0) return 1.0;
        for (std::size_t i = 0; i < v.pixels.size(); ++i) v.pixels[i] = hv.pixels[i] / eig;
    }
    return eig;
}

double DataTerm::data_norm_sq() const {
    double total = 0.0;
    for (const auto& e : set_->entries)
        for (double y : e.proj.values) total += y * y;
    if (has_prescan())
        for (double y : set_->prescan->image_lowres.pixels) total += prescan_weight_ * y * y;
    return total;
}

std::vector<int> DataTerm::all_entries() const {
    std::vector<int> idx(set_->entries.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    return idx;
}

}  // namespace dal
