#pragma once

#include <vector>

#include "dal/measurement.hpp"

namespace dal {

// Quadratic measurement-fidelity objective
//   sum_psi ||A_psi(x) - y_psi||^2  (+ prescan_weight * ||D(x) - y_pre||^2)
// shared by iterative reconstruction, data consistency and the trajectory
// baselines. Gradients are exact (adjoint-based).
class DataTerm {
public:
    DataTerm(const MeasurementSet& set, const DesignSpace& space, double prescan_weight = 1.0);

    const MeasurementSet& set() const { return *set_; }
    const DesignSpace& space() const { return *space_; }
    double prescan_weight() const { return prescan_weight_; }
    bool has_prescan() const;
    int entry_count() const { return set_->size(); }

    // Loss over the listed entries (indices into set.entries); prescan term
    // excluded.
    double loss_entries(const Image& x, const std::vector<int>& entries) const;
    double loss_prescan(const Image& x) const;
    // Full loss: all entries plus prescan term.
    double loss(const Image& x) const;

    // grad += scale * d/dx of the entry terms (again prescan separate).
    void add_grad_entries(const Image& x, const std::vector<int>& entries, double scale,
                          Image& grad) const;
    void add_grad_prescan(const Image& x, double scale, Image& grad) const;
    void add_grad(const Image& x, double scale, Image& grad) const;

    // Largest eigenvalue of the full Hessian 2*(sum A^T A + w D^T D), found
    // by seeded power iteration; the 1/L step size guarantees descent.
    double lipschitz(std::uint64_t seed = 17, int iterations = 20) const;

    // Sum of squared measurement norms, for relative residuals.
    double data_norm_sq() const;

    std::vector<int> all_entries() const;

private:
    const MeasurementSet* set_;
    const DesignSpace* space_;
    double prescan_weight_;
};

}  // namespace dal
