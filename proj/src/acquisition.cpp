#include "dal/acquisition.hpp"

#include <Eigen/Cholesky>
#include <limits>

#include "dal/parallel.hpp"

namespace dal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int argmax_lowest_tie(const std::vector<double>& scores) {
    int best = -1;
    double best_v = kNegInf;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] > best_v) {
            best_v = scores[i];
            best = static_cast<int>(i);
        }
    }
    return best;
}

void finalize(ScoreTable& t) {
    bool any = false;
    for (std::size_t i = 0; i < t.measured.size(); ++i) {
        if (t.measured[i]) t.scores[i] = kNegInf;
        else any = true;
    }
    require(any, "acquisition: design space exhausted");
    t.chosen = argmax_lowest_tie(t.scores);
}

std::vector<std::vector<double>> project_batch(const SampleBatch& batch, const DesignSpace& space,
                                               int design) {
    std::vector<std::vector<double>> proj;
    proj.reserve(batch.samples.size() + 1);
    for (const Image& s : batch.samples) proj.push_back(space.forward(s, design).values);
    return proj;
}

}  // namespace

ScoreTable score_variance(const SampleBatch& batch, const DesignSpace& space,
                          const std::vector<char>& measured) {
    require(batch.k() >= 1, "score_variance: empty batch");
    require(static_cast<int>(measured.size()) == space.size(),
            "score_variance: measured mask size mismatch");
    ScoreTable t;
    t.scores.assign(space.size(), 0.0);
    t.measured = measured;
    const double inv_k = 1.0 / batch.k();
    parallel_for(space.size(), [&](std::int64_t psi) {
        if (measured[psi]) return;
        const auto proj = project_batch(batch, space, static_cast<int>(psi));
        const auto mean = space.forward(batch.mean, static_cast<int>(psi)).values;
        double score = 0.0;
        for (const auto& p : proj)
            for (std::size_t j = 0; j < p.size(); ++j) {
                const double r = p[j] - mean[j];
                score += r * r;
            }
        t.scores[psi] = score * inv_k;
    });
    finalize(t);
    return t;
}

ScoreTable score_committee(const SampleBatch& batch, const Image& reference,
                           const DesignSpace& space, const std::vector<char>& measured) {
    require(batch.k() >= 1, "score_committee: empty batch");
    require(reference.size == space.op.image_size, "score_committee: reference size mismatch");
    ScoreTable t;
    t.scores.assign(space.size(), 0.0);
    t.measured = measured;
    parallel_for(space.size(), [&](std::int64_t psi) {
        if (measured[psi]) return;
        const auto proj = project_batch(batch, space, static_cast<int>(psi));
        const auto ref = space.forward(reference, static_cast<int>(psi)).values;
        double score = 0.0;
        for (const auto& p : proj)
            for (std::size_t j = 0; j < p.size(); ++j) {
                const double r = p[j] - ref[j];
                score += r * r;
            }
        t.scores[psi] = score;
    });
    finalize(t);
    return t;
}

ScoreTable score_gauss_entropy(const SampleBatch& batch, double sigma_lik,
                               const DesignSpace& space, const std::vector<char>& measured) {
    require(batch.k() >= 2, "score_gauss_entropy: needs k >= 2 samples");
    require(sigma_lik > 0.0, "score_gauss_entropy: sigma_lik must be positive");
    ScoreTable t;
    t.scores.assign(space.size(), 0.0);
    t.measured = measured;
    const int k = batch.k();
    const int l = space.values_per_projection();
    const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(k));
    parallel_for(space.size(), [&](std::int64_t psi) {
        if (measured[psi]) return;
        const auto proj = project_batch(batch, space, static_cast<int>(psi));
        const auto mean = space.forward(batch.mean, static_cast<int>(psi)).values;
        // V: l x k, columns (A x_i - A x_mean) / sqrt(k)
        Eigen::MatrixXd V(l, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < l; ++j) V(j, i) = (proj[i][j] - mean[j]) * inv_sqrt_k;
        double logdet;
        if (k <= l) {
            Eigen::MatrixXd m = V.transpose() * V;
            m.diagonal().array() += sigma_lik;
            const Eigen::LLT<Eigen::MatrixXd> llt(m);
            logdet = (l - k) * std::log(sigma_lik);
            for (int i = 0; i < k; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
        } else {
            Eigen::MatrixXd m = V * V.transpose();
            m.diagonal().array() += sigma_lik;
            const Eigen::LLT<Eigen::MatrixXd> llt(m);
            logdet = 0.0;
            for (int i = 0; i < l; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
        }
        t.scores[psi] = logdet;
    });
    finalize(t);
    return t;
}

std::vector<int> bit_reversed_order(int n) {
    require(n >= 1, "bit_reversed_order: n must be >= 1");
    int bits = 0;
    while ((1 << bits) < n) ++bits;
    std::vector<int> order;
    order.reserve(n);
    for (int v = 0; v < (1 << bits); ++v) {
        int r = 0;
        for (int b = 0; b < bits; ++b)
            if (v & (1 << b)) r |= 1 << (bits - 1 - b);
        if (r < n) order.push_back(r);
    }
    if (bits == 0) order.push_back(0);
    return order;
}

int next_design(const AcquisitionConfig& cfg, const SampleBatch* batch, const DesignSpace& space,
                const std::vector<char>& measured, int /*step*/, ScoreTable* table_out) {
    require(static_cast<int>(measured.size()) == space.size(),
            "next_design: measured mask size mismatch");

    auto pool = cfg.pool;
    if (pool.empty()) {
        pool.resize(space.size());
        for (int i = 0; i < space.size(); ++i) pool[i] = i;
    }
    for (int p : pool) require(space.valid_design(p), "next_design: pool design out of range");

    switch (cfg.strategy) {
        case Strategy::Variance:
        case Strategy::Committee:
        case Strategy::GaussEntropy: {
            require(batch != nullptr, "next_design: adaptive strategy needs a sample batch");
            ScoreTable t;
            if (cfg.strategy == Strategy::Variance)
                t = score_variance(*batch, space, measured);
            else if (cfg.strategy == Strategy::Committee)
                t = score_committee(*batch, batch->mean, space, measured);
            else
                t = score_gauss_entropy(*batch, cfg.sigma_lik, space, measured);
            if (table_out) *table_out = t;
            return t.chosen;
        }
        case Strategy::Uniform: {
            const auto order = bit_reversed_order(static_cast<int>(pool.size()));
            for (int idx : order) {
                const int design = pool[idx];
                if (!measured[design]) {
                    if (table_out) {
                        table_out->scores.assign(space.size(), 0.0);
                        table_out->measured = measured;
                        table_out->chosen = design;
                    }
                    return design;
                }
            }
            fail("next_design: design pool exhausted");
        }
        case Strategy::LowToHigh: {
            const double center = space.op.image_size / 2.0;
            int best = -1;
            double best_dist = std::numeric_limits<double>::infinity();
            for (int design : pool) {
                if (measured[design]) continue;
                const double dist = std::abs(space.designs[design] - center);
                if (dist < best_dist) {
                    best_dist = dist;
                    best = design;
                }
            }
            require(best >= 0, "next_design: design pool exhausted");
            if (table_out) {
                table_out->scores.assign(space.size(), 0.0);
                table_out->measured = measured;
                table_out->chosen = best;
            }
            return best;
        }
    }
    fail("next_design: unknown strategy");
}

}  // namespace dal
