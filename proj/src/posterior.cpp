#include "dal/posterior.hpp"

#include <complex>

#include "dal/fft.hpp"

namespace dal {

SampleBatch make_sample_batch(std::vector<Image> samples, SampleBatch::Provenance prov,
                              ConsistencyStats stats) {
    require(!samples.empty(), "SampleBatch: k must be >= 1");
    SampleBatch b;
    b.samples = std::move(samples);
    b.mean = image_mean(b.samples);
    b.provenance = prov;
    b.stats = stats;
    return b;
}

namespace {

// gradient of the data loss wrt the diffusion-domain iterate (chain rule of
// the [0,1] de-normalization)
void add_grad_diffusion(const DataTerm& term, const Image& z, const std::vector<int>& entries,
                        double entry_scale, Image& grad) {
    const Image x = denormalize_from_diffusion(z);
    Image gx(x.size, 0.0);
    term.add_grad_entries(x, entries, entry_scale, gx);
    term.add_grad_prescan(x, 1.0, gx);
    for (std::size_t i = 0; i < grad.pixels.size(); ++i) grad.pixels[i] += 0.5 * gx.pixels[i];
}

double diffusion_domain_step(const DataTerm& term, double configured) {
    if (configured > 0.0) return configured;
    // Hessian in the z-domain is 1/4 of the image-domain one
    return 1.0 / (term.lipschitz() / 4.0);
}

bool structurally_noop(const ConsistencyConfig& cfg, const MeasurementSet& set) {
    if (set.empty() && !(set.prescan.has_value() && cfg.prescan_weight > 0.0)) return true;
    if (cfg.mode == ConsistencyMode::Soft && cfg.grad_steps == 0) return true;
    return false;
}

std::vector<int> draw_batch(const MeasurementSet& set, int batch_size, Rng& rng) {
    const int n = set.size();
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    if (batch_size <= 0 || batch_size >= n) return all;
    // partial Fisher-Yates draw of batch_size distinct entries
    for (int i = 0; i < batch_size; ++i) {
        const int j = static_cast<int>(rng.uniform_int(i, n - 1));
        std::swap(all[i], all[j]);
    }
    all.resize(batch_size);
    return all;
}

}  // namespace

Image soft_consistency(const Image& x0_hat, const MeasurementSet& set, const DesignSpace& space,
                       const ConsistencyConfig& cfg, Rng& rng, ConsistencyStats* stats) {
    require(cfg.mode == ConsistencyMode::Soft, "soft_consistency: cfg.mode must be Soft");
    require(cfg.grad_steps >= 0, "soft_consistency: grad_steps must be >= 0");
    if (structurally_noop(cfg, set)) return x0_hat;
    DataTerm term(set, space, cfg.prescan_weight);
    const double step = diffusion_domain_step(term, cfg.step_size);
    const int n = set.size();
    Image z = x0_hat;
    for (int it = 0; it < cfg.grad_steps; ++it) {
        const auto batch = draw_batch(set, cfg.batch_size, rng);
        const double scale =
            batch.empty() ? 1.0 : static_cast<double>(n) / static_cast<double>(batch.size());
        Image grad(z.size, 0.0);
        add_grad_diffusion(term, z, batch, scale, grad);
        for (std::size_t i = 0; i < z.pixels.size(); ++i) z.pixels[i] -= step * grad.pixels[i];
        if (!z.finite())
            fail("soft_consistency: non-finite iterate at step " + std::to_string(it + 1));
        if (stats) stats->grad_steps += 1;
    }
    return z;
}

HardResult hard_consistency(const Image& x0_hat, const MeasurementSet& set,
                            const DesignSpace& space, const ConsistencyConfig& cfg,
                            ConsistencyStats* stats) {
    require(cfg.mode == ConsistencyMode::Hard, "hard_consistency: cfg.mode must be Hard");
    require(cfg.hard_threshold > 0.0, "hard_consistency: threshold must be positive");
    HardResult res;
    res.image = x0_hat;
    res.converged = true;
    if (set.empty() && !(set.prescan.has_value() && cfg.prescan_weight > 0.0)) return res;
    DataTerm term(set, space, cfg.prescan_weight);
    const double step = diffusion_domain_step(term, cfg.step_size);
    const double norm_sq = std::max(term.data_norm_sq(), 1e-300);
    const auto all = term.all_entries();

    Image z = x0_hat;
    auto rel_residual = [&](const Image& zz) {
        const Image x = denormalize_from_diffusion(zz);
        return std::sqrt((term.loss_entries(x, all) + term.loss_prescan(x)) / norm_sq);
    };
    double best_res = rel_residual(z);
    Image best = z;
    int it = 0;
    while (best_res >= cfg.hard_threshold && it < cfg.hard_max_steps) {
        Image grad(z.size, 0.0);
        add_grad_diffusion(term, z, all, 1.0, grad);
        for (std::size_t i = 0; i < z.pixels.size(); ++i) z.pixels[i] -= step * grad.pixels[i];
        ++it;
        if (!z.finite())
            fail("hard_consistency: non-finite iterate at step " + std::to_string(it));
        const double r = rel_residual(z);
        if (r < best_res) {
            best_res = r;
            best = z;
        }
        if (stats) stats->grad_steps += 1;
    }
    res.image = best;
    res.steps = it;
    res.converged = best_res < cfg.hard_threshold;
    return res;
}

Image stochastic_encode(const Image& x0_star, int t, std::uint64_t seed,
                        const NoiseSchedule& sched) {
    Rng rng(derive_seed(seed, fnv1a("stochastic-encode")));
    const Image eps = gaussian_image(x0_star.size, rng);
    return q_sample(x0_star, t, eps, sched);
}

namespace {

int mirror_index(int r, int d) { return (d - r) % d; }

// conjugate + column mirror of one measured row (realness constraint)
std::vector<double> conj_col_mirror(const std::vector<double>& v, int d) {
    std::vector<double> out(2 * d);
    for (int c = 0; c < d; ++c) {
        const int cm = mirror_index(c, d);
        out[2 * c] = v[2 * cm];
        out[2 * c + 1] = -v[2 * cm + 1];
    }
    return out;
}

}  // namespace

Image fourier_inpaint(const Image& x0_hat, const MeasurementSet& set, const DesignSpace& space) {
    require(space.op.kind == OperatorKind::FourierRowMask,
            "fourier_inpaint: requires a FourierRowMask design space");
    const int d = space.op.image_size;
    require(x0_hat.size == d, "fourier_inpaint: image size mismatch");
    for (const auto& e : set.entries) {
        require(static_cast<int>(e.proj.values.size()) == 2 * d,
                "fourier_inpaint: mixed operator kinds in measurement set");
    }

    std::vector<std::complex<double>> spec(static_cast<std::size_t>(d) * d);
    for (std::size_t i = 0; i < x0_hat.pixels.size(); ++i) spec[i] = x0_hat.pixels[i];
    fft_2d(spec.data(), d, d, false);

    // shifted-row view of the spectrum
    const int m = d / 2;
    auto row_ptr = [&](int shifted_row) {
        const int kr = ((shifted_row - m) % d + d) % d;
        return spec.data() + static_cast<std::size_t>(kr) * d;
    };
    auto write_row = [&](int shifted_row, const std::vector<double>& vals) {
        std::complex<double>* p = row_ptr(shifted_row);
        for (int c = 0; c < d; ++c) {
            const int kc = ((c - m) % d + d) % d;
            p[kc] = {vals[2 * c], vals[2 * c + 1]};
        }
    };

    std::vector<const std::vector<double>*> measured(d, nullptr);
    for (const auto& e : set.entries)
        measured[static_cast<int>(space.designs[e.design])] = &e.proj.values;

    for (int r = 0; r < d; ++r) {
        if (!measured[r]) continue;
        const int mr = mirror_index(r, d);
        std::vector<double> z = *measured[r];
        if (mr == r) {
            // self-mirror row: symmetrize within the row
            const auto mirrored = conj_col_mirror(z, d);
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = 0.5 * (z[i] + mirrored[i]);
            write_row(r, z);
        } else if (measured[mr]) {
            if (mr < r) continue;  // pair handled at the lower index
            const auto other = conj_col_mirror(*measured[mr], d);
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = 0.5 * (z[i] + other[i]);
            write_row(r, z);
            write_row(mr, conj_col_mirror(z, d));
        } else {
            write_row(r, z);
            write_row(mr, conj_col_mirror(z, d));
        }
    }

    fft_2d(spec.data(), d, d, true);
    Image out(d);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] = spec[i].real();
    return out;
}

SampleBatch conditional_sample_batch(Denoiser& den, const NoiseSchedule& sched,
                                     const MeasurementSet& set, const DesignSpace& space,
                                     int num_steps, int k, const ConsistencyConfig& cfg,
                                     std::uint64_t seed) {
    require(k >= 1, "conditional_sample_batch: k must be >= 1");
    const int d = space.op.image_size;
    SampleBatch::Provenance prov{den.weights_hash(), set.hash(), seed};

    if (structurally_noop(cfg, set)) {
        ConsistencyStats stats;
        stats.denoiser_evals = num_steps;
        return make_sample_batch(ddim_sample(den, sched, num_steps, seed, k, d), prov, stats);
    }

    const auto ts = ddim_timesteps(sched.T, num_steps);
    ConsistencyStats stats;

    // step size resolved once per measurement set
    ConsistencyConfig rcfg = cfg;
    if (rcfg.step_size <= 0.0 && rcfg.mode != ConsistencyMode::FourierInpaint) {
        DataTerm term(set, space, cfg.prescan_weight);
        rcfg.step_size = diffusion_domain_step(term, 0.0);
    }

    std::vector<Rng> chain_rng;
    std::vector<Image> x(k);
    for (int i = 0; i < k; ++i) {
        Rng init(derive_seed(seed, {fnv1a("ddim-init"), static_cast<std::uint64_t>(i)}));
        x[i] = gaussian_image(d, init);
        chain_rng.emplace_back(derive_seed(seed, {fnv1a("chain"), static_cast<std::uint64_t>(i)}));
    }

    for (std::size_t j = 0; j < ts.size(); ++j) {
        const int t = ts[j];
        const int t_prev = j + 1 < ts.size() ? ts[j + 1] : 0;
        const Tensor eps = den.predict(images_to_tensor(x), std::vector<int>(k, t));
        stats.denoiser_evals += 1;
        const double ab = sched.alpha_bar_at(t);
        const double ab_prev = sched.alpha_bar_at(t_prev);
        const double inv_sqrt_ab = 1.0 / std::sqrt(ab);
        const double sq1m = std::sqrt(1.0 - ab);

        // three-phase schedule in Hard mode: first third unconditioned,
        // middle third soft, final third hard
        enum class Phase { None, Soft, Hard, Inpaint };
        Phase phase = Phase::Soft;
        if (cfg.mode == ConsistencyMode::FourierInpaint) {
            phase = Phase::Inpaint;
        } else if (cfg.mode == ConsistencyMode::Hard) {
            const std::size_t third = ts.size() / 3;
            if (j < third)
                phase = Phase::None;
            else if (j < 2 * third)
                phase = Phase::Soft;
            else
                phase = Phase::Hard;
        }

        for (int i = 0; i < k; ++i) {
            Image x0_hat(d);
            const float* e = eps.item(i);
            for (std::size_t p = 0; p < x0_hat.pixels.size(); ++p)
                x0_hat.pixels[p] = (x[i].pixels[p] - sq1m * static_cast<double>(e[p])) * inv_sqrt_ab;

            if (phase == Phase::None) {
                // unconditioned DDIM (eta = 0) update
                const double c0 = std::sqrt(ab_prev);
                const double c1 = std::sqrt(1.0 - ab_prev);
                for (std::size_t p = 0; p < x0_hat.pixels.size(); ++p)
                    x[i].pixels[p] = c0 * x0_hat.pixels[p] + c1 * static_cast<double>(e[p]);
                continue;
            }

            Image x0_star(d);
            if (phase == Phase::Inpaint) {
                const Image img = denormalize_from_diffusion(x0_hat);
                x0_star = normalize_to_diffusion(fourier_inpaint(img, set, space));
            } else if (phase == Phase::Soft) {
                ConsistencyConfig soft_cfg = rcfg;
                soft_cfg.mode = ConsistencyMode::Soft;
                x0_star = soft_consistency(x0_hat, set, space, soft_cfg, chain_rng[i], &stats);
            } else {
                ConsistencyConfig hard_cfg = rcfg;
                hard_cfg.mode = ConsistencyMode::Hard;
                const HardResult hr = hard_consistency(x0_hat, set, space, hard_cfg, &stats);
                stats.hard_converged = stats.hard_converged && hr.converged;
                x0_star = hr.image;
            }

            if (t_prev > 0) {
                const Image enc_eps = gaussian_image(d, chain_rng[i]);
                x[i] = q_sample(x0_star, t_prev, enc_eps, sched);
            } else {
                x[i] = x0_star;
            }
        }
    }

    std::vector<Image> out(k);
    for (int i = 0; i < k; ++i) out[i] = denormalize_from_diffusion(x[i]);
    return make_sample_batch(std::move(out), prov, stats);
}

}  // namespace dal
