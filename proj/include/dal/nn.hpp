#pragma once

#include <Eigen/Core>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dal/parallel.hpp"
#include "dal/rng.hpp"
#include "dal/tensor.hpp"

namespace dal {

template <typename T>
struct ParamRef {
    std::string name;
    std::vector<T>* w;
    std::vector<T>* g;
};

template <typename T>
using ParamList = std::vector<ParamRef<T>>;

namespace nn {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
inline T silu_fn(T x) {
    const T s = T(1) / (T(1) + std::exp(-x));
    return x * s;
}

template <typename T>
inline T silu_grad_fn(T x) {
    const T s = T(1) / (T(1) + std::exp(-x));
    return s * (T(1) + x * (T(1) - s));
}

template <typename T>
using ArrMap = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>;
template <typename T>
using CArrMap = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>;

// SIMD exp via Eigen, split over the thread pool.
template <typename T>
TensorT<T> silu(const TensorT<T>& x) {
    TensorT<T> y(x.n, x.c, x.h, x.w);
    parallel_for_chunks(static_cast<std::int64_t>(x.v.size()), [&](std::int64_t b, std::int64_t e) {
        CArrMap<T> xs(x.v.data() + b, e - b);
        ArrMap<T> ys(y.v.data() + b, e - b);
        ys = xs / (T(1) + (-xs).exp());
    });
    return y;
}

// gy * silu'(x), elementwise
template <typename T>
TensorT<T> silu_backward(const TensorT<T>& x, const TensorT<T>& gy) {
    TensorT<T> gx(x.n, x.c, x.h, x.w);
    parallel_for_chunks(static_cast<std::int64_t>(x.v.size()), [&](std::int64_t b, std::int64_t e) {
        CArrMap<T> xs(x.v.data() + b, e - b);
        CArrMap<T> gs(gy.v.data() + b, e - b);
        ArrMap<T> os(gx.v.data() + b, e - b);
        const auto s = (T(1) + (-xs).exp()).inverse();
        os = gs * s * (T(1) + xs * (T(1) - s));
    });
    return gx;
}

// 2D convolution, square kernel, zero padding. Backward accumulates weight
// and bias gradients and returns the input gradient. Per-item im2col + GEMM;
// items run in parallel with per-item gradient buffers reduced in index
// order so results do not depend on the thread count.
template <typename T>
class Conv2d {
public:
    Conv2d() = default;

    Conv2d(int cin, int cout, int k, int stride, int pad, Rng& rng, bool zero_init = false)
        : cin_(cin), cout_(cout), k_(k), stride_(stride), pad_(pad) {
        w_.assign(static_cast<std::size_t>(cout) * cin * k * k, T(0));
        b_.assign(cout, T(0));
        wg_.assign(w_.size(), T(0));
        bg_.assign(b_.size(), T(0));
        if (!zero_init) {
            const double std = std::sqrt(2.0 / (static_cast<double>(cin) * k * k));
            for (auto& v : w_) v = static_cast<T>(rng.normal(0.0, std));
        }
    }

    int out_dim(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

    TensorT<T> forward(const TensorT<T>& x, bool save) {
        require(x.c == cin_, "Conv2d: channel mismatch");
        if (save) x_ = x;
        const int ho = out_dim(x.h), wo = out_dim(x.w);
        TensorT<T> y(x.n, cout_, ho, wo);
        const int kk = cin_ * k_ * k_;
        const std::size_t howo = static_cast<std::size_t>(ho) * wo;
        parallel_for(x.n, [&](std::int64_t in) {
            thread_local std::vector<T> col;
            col.resize(static_cast<std::size_t>(kk) * howo);
            im2col(x, static_cast<int>(in), col.data());
            Eigen::Map<const MatR<T>> W(w_.data(), cout_, kk);
            Eigen::Map<const MatR<T>> C(col.data(), kk, static_cast<Eigen::Index>(howo));
            Eigen::Map<MatR<T>> Y(y.chan(static_cast<int>(in), 0), cout_,
                                  static_cast<Eigen::Index>(howo));
            Y.noalias() = W * C;
            for (int oc = 0; oc < cout_; ++oc) Y.row(oc).array() += b_[oc];
        });
        return y;
    }

    TensorT<T> backward(const TensorT<T>& gy) {
        require(x_.n == gy.n, "Conv2d: backward without saved forward");
        const int ho = gy.h, wo = gy.w;
        const int kk = cin_ * k_ * k_;
        const std::size_t howo = static_cast<std::size_t>(ho) * wo;
        TensorT<T> gx(x_.n, cin_, x_.h, x_.w);
        std::vector<std::vector<T>> wg_item(x_.n);
        std::vector<std::vector<T>> bg_item(x_.n);
        parallel_for(x_.n, [&](std::int64_t in) {
            thread_local std::vector<T> col, gcol;
            col.resize(static_cast<std::size_t>(kk) * howo);
            gcol.resize(col.size());
            im2col(x_, static_cast<int>(in), col.data());
            Eigen::Map<const MatR<T>> W(w_.data(), cout_, kk);
            Eigen::Map<const MatR<T>> GY(gy.chan(static_cast<int>(in), 0), cout_,
                                         static_cast<Eigen::Index>(howo));
            Eigen::Map<const MatR<T>> C(col.data(), kk, static_cast<Eigen::Index>(howo));
            auto& wg = wg_item[in];
            auto& bg = bg_item[in];
            wg.assign(w_.size(), T(0));
            bg.assign(b_.size(), T(0));
            Eigen::Map<MatR<T>> WG(wg.data(), cout_, kk);
            WG.noalias() = GY * C.transpose();
            for (int oc = 0; oc < cout_; ++oc) bg[oc] = GY.row(oc).sum();
            Eigen::Map<MatR<T>> GC(gcol.data(), kk, static_cast<Eigen::Index>(howo));
            GC.noalias() = W.transpose() * GY;
            col2im(gcol.data(), gx, static_cast<int>(in), ho, wo);
        });
        for (int in = 0; in < x_.n; ++in) {
            for (std::size_t i = 0; i < wg_.size(); ++i) wg_[i] += wg_item[in][i];
            for (std::size_t i = 0; i < bg_.size(); ++i) bg_[i] += bg_item[in][i];
        }
        return gx;
    }

    void collect(const std::string& prefix, ParamList<T>& out) {
        out.push_back({prefix + ".weight", &w_, &wg_});
        out.push_back({prefix + ".bias", &b_, &bg_});
    }

    void release_saved() { x_ = TensorT<T>(); }

private:
    // valid output-column range for a kernel column offset; iw = ow*s - p + kc
    void ow_bounds(int kc, int in_w, int wo, int& lo, int& hi) const {
        lo = 0;
        while (lo < wo && lo * stride_ - pad_ + kc < 0) ++lo;
        hi = wo;
        while (hi > lo && (hi - 1) * stride_ - pad_ + kc >= in_w) --hi;
    }

    void im2col(const TensorT<T>& x, int in, T* col) const {
        const int ho = out_dim(x.h), wo = out_dim(x.w);
        const std::size_t howo = static_cast<std::size_t>(ho) * wo;
        std::size_t row = 0;
        for (int ic = 0; ic < cin_; ++ic) {
            const T* xc = x.chan(in, ic);
            for (int kr = 0; kr < k_; ++kr) {
                for (int kc = 0; kc < k_; ++kc, ++row) {
                    T* dst = col + row * howo;
                    int lo, hi;
                    ow_bounds(kc, x.w, wo, lo, hi);
                    for (int oh = 0; oh < ho; ++oh) {
                        const int ih = oh * stride_ - pad_ + kr;
                        T* d = dst + static_cast<std::size_t>(oh) * wo;
                        if (ih < 0 || ih >= x.h) {
                            std::fill(d, d + wo, T(0));
                            continue;
                        }
                        const T* src = xc + static_cast<std::size_t>(ih) * x.w;
                        for (int ow = 0; ow < lo; ++ow) d[ow] = T(0);
                        if (stride_ == 1) {
                            const int off = kc - pad_;
                            std::copy(src + lo + off, src + hi + off, d + lo);
                        } else {
                            for (int ow = lo; ow < hi; ++ow) d[ow] = src[ow * stride_ - pad_ + kc];
                        }
                        for (int ow = hi; ow < wo; ++ow) d[ow] = T(0);
                    }
                }
            }
        }
    }

    void col2im(const T* gcol, TensorT<T>& gx, int in, int ho, int wo) const {
        const std::size_t howo = static_cast<std::size_t>(ho) * wo;
        std::size_t row = 0;
        for (int ic = 0; ic < cin_; ++ic) {
            T* xc = gx.chan(in, ic);
            for (int kr = 0; kr < k_; ++kr) {
                for (int kc = 0; kc < k_; ++kc, ++row) {
                    const T* src = gcol + row * howo;
                    int lo, hi;
                    ow_bounds(kc, gx.w, wo, lo, hi);
                    for (int oh = 0; oh < ho; ++oh) {
                        const int ih = oh * stride_ - pad_ + kr;
                        if (ih < 0 || ih >= gx.h) continue;
                        T* dst = xc + static_cast<std::size_t>(ih) * gx.w;
                        const T* s = src + static_cast<std::size_t>(oh) * wo;
                        if (stride_ == 1) {
                            const int off = kc - pad_;
                            for (int ow = lo; ow < hi; ++ow) dst[ow + off] += s[ow];
                        } else {
                            for (int ow = lo; ow < hi; ++ow) dst[ow * stride_ - pad_ + kc] += s[ow];
                        }
                    }
                }
            }
        }
    }

    int cin_ = 0, cout_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
    std::vector<T> w_, b_, wg_, bg_;
    TensorT<T> x_;
};

inline int norm_groups(int channels) {
    int g = std::min(channels, 8);
    while (channels % g != 0) --g;
    return g;
}

template <typename T>
class GroupNorm {
public:
    GroupNorm() = default;

    explicit GroupNorm(int channels)
        : channels_(channels), groups_(norm_groups(channels)) {
        gamma_.assign(channels, T(1));
        beta_.assign(channels, T(0));
        gg_.assign(channels, T(0));
        bg_.assign(channels, T(0));
    }

    TensorT<T> forward(const TensorT<T>& x, bool save) {
        require(x.c == channels_, "GroupNorm: channel mismatch");
        const int cpg = channels_ / groups_;
        const std::size_t gsize = static_cast<std::size_t>(cpg) * x.plane();
        TensorT<T> y(x.n, x.c, x.h, x.w);
        if (save) {
            x_ = x;
            mean_.assign(static_cast<std::size_t>(x.n) * groups_, T(0));
            inv_std_.assign(mean_.size(), T(0));
        }
        parallel_for(static_cast<std::int64_t>(x.n) * groups_, [&](std::int64_t idx) {
            const int in = static_cast<int>(idx / groups_);
            const int g = static_cast<int>(idx % groups_);
            const T* xp = x.chan(in, g * cpg);
            T mean = 0, var = 0;
            for (std::size_t i = 0; i < gsize; ++i) mean += xp[i];
            mean /= static_cast<T>(gsize);
            for (std::size_t i = 0; i < gsize; ++i) {
                const T d = xp[i] - mean;
                var += d * d;
            }
            var /= static_cast<T>(gsize);
            const T inv = T(1) / std::sqrt(var + eps_);
            if (save) {
                mean_[in * groups_ + g] = mean;
                inv_std_[in * groups_ + g] = inv;
            }
            T* yp = y.chan(in, g * cpg);
            for (int c = 0; c < cpg; ++c) {
                const T ga = gamma_[g * cpg + c], be = beta_[g * cpg + c];
                const T* xc = xp + c * x.plane();
                T* yc = yp + c * x.plane();
                for (std::size_t i = 0; i < x.plane(); ++i)
                    yc[i] = (xc[i] - mean) * inv * ga + be;
            }
        });
        return y;
    }

    TensorT<T> backward(const TensorT<T>& gy) {
        const TensorT<T>& x = x_;
        const int cpg = channels_ / groups_;
        const std::size_t plane = x.plane();
        const std::size_t gsize = static_cast<std::size_t>(cpg) * plane;
        TensorT<T> gx(x.n, x.c, x.h, x.w);
        // parallel over groups only: the per-channel parameter-gradient
        // accumulations stay single-owner and item-ordered
        parallel_for(groups_, [&](std::int64_t gi) {
            const int g = static_cast<int>(gi);
            for (int in = 0; in < x.n; ++in) {
                const T mean = mean_[in * groups_ + g];
                const T inv = inv_std_[in * groups_ + g];
                // per-channel param grads and group-level sums
                T sum_gxh = 0, sum_gh = 0;
                for (int c = 0; c < cpg; ++c) {
                    const int ch = g * cpg + c;
                    const T* xc = x.chan(in, ch);
                    const T* gc = gy.chan(in, ch);
                    T dg = 0, db = 0;
                    for (std::size_t i = 0; i < plane; ++i) {
                        const T xh = (xc[i] - mean) * inv;
                        dg += gc[i] * xh;
                        db += gc[i];
                        sum_gxh += gc[i] * gamma_[ch] * xh;
                        sum_gh += gc[i] * gamma_[ch];
                    }
                    gg_[ch] += dg;
                    bg_[ch] += db;
                }
                const T m = static_cast<T>(gsize);
                for (int c = 0; c < cpg; ++c) {
                    const int ch = g * cpg + c;
                    const T* xc = x.chan(in, ch);
                    const T* gc = gy.chan(in, ch);
                    T* gxc = gx.chan(in, ch);
                    for (std::size_t i = 0; i < plane; ++i) {
                        const T xh = (xc[i] - mean) * inv;
                        gxc[i] = inv * (gc[i] * gamma_[ch] - sum_gh / m - xh * sum_gxh / m);
                    }
                }
            }
        });
        return gx;
    }

    void collect(const std::string& prefix, ParamList<T>& out) {
        out.push_back({prefix + ".gamma", &gamma_, &gg_});
        out.push_back({prefix + ".beta", &beta_, &bg_});
    }

private:
    int channels_ = 0, groups_ = 1;
    T eps_ = static_cast<T>(1e-5);
    std::vector<T> gamma_, beta_, gg_, bg_;
    TensorT<T> x_;
    std::vector<T> mean_, inv_std_;
};

template <typename T>
TensorT<T> upsample_nearest2(const TensorT<T>& x) {
    TensorT<T> y(x.n, x.c, x.h * 2, x.w * 2);
    for (int in = 0; in < x.n; ++in)
        for (int c = 0; c < x.c; ++c) {
            const T* xp = x.chan(in, c);
            T* yp = y.chan(in, c);
            for (int r = 0; r < x.h; ++r)
                for (int cc = 0; cc < x.w; ++cc) {
                    const T v = xp[r * x.w + cc];
                    T* base = yp + (2 * r) * y.w + 2 * cc;
                    base[0] = v;
                    base[1] = v;
                    base[y.w] = v;
                    base[y.w + 1] = v;
                }
        }
    return y;
}

template <typename T>
TensorT<T> upsample_nearest2_backward(const TensorT<T>& gy) {
    TensorT<T> gx(gy.n, gy.c, gy.h / 2, gy.w / 2);
    for (int in = 0; in < gy.n; ++in)
        for (int c = 0; c < gy.c; ++c) {
            const T* gp = gy.chan(in, c);
            T* xp = gx.chan(in, c);
            for (int r = 0; r < gx.h; ++r)
                for (int cc = 0; cc < gx.w; ++cc) {
                    const T* base = gp + (2 * r) * gy.w + 2 * cc;
                    xp[r * gx.w + cc] = base[0] + base[1] + base[gy.w] + base[gy.w + 1];
                }
        }
    return gx;
}

// Residual block with time-conditioned affine modulation:
//   h = conv1(silu(gn1(x)))
//   h = gn2(h) * (1 + scale) + shift,  (scale, shift) = W silu(emb) + b
//   out = conv2(silu(h)) + skip(x)
template <typename T>
class ResBlock {
public:
    ResBlock() = default;

    ResBlock(int cin, int cout, int emb_dim, Rng& rng)
        : cin_(cin), cout_(cout),
          gn1_(cin), gn2_(cout),
          conv1_(cin, cout, 3, 1, 1, rng),
          conv2_(cout, cout, 3, 1, 1, rng, /*zero_init=*/true),
          emb_proj_(emb_dim, 2 * cout, 1, 1, 0, rng) {
        if (cin != cout) skip_.emplace(cin, cout, 1, 1, 0, rng);
    }

    TensorT<T> forward(const TensorT<T>& x, const TensorT<T>& emb, bool save) {
        TensorT<T> a = gn1_.forward(x, save);
        if (save) a_ = a;
        TensorT<T> h = conv1_.forward(silu(a), save);
        if (save) emb_in_ = emb;
        TensorT<T> ss = emb_proj_.forward(silu(emb), save);  // (n, 2*cout, 1, 1)
        TensorT<T> g = gn2_.forward(h, save);
        if (save) g_ = g;
        if (save) ss_ = ss;
        TensorT<T> h4(g.n, g.c, g.h, g.w);
        for (int in = 0; in < g.n; ++in)
            for (int c = 0; c < g.c; ++c) {
                const T sc = ss.v[in * ss.item_size() + c];
                const T sh = ss.v[in * ss.item_size() + cout_ + c];
                const T* gp = g.chan(in, c);
                T* hp = h4.chan(in, c);
                for (std::size_t i = 0; i < g.plane(); ++i) hp[i] = gp[i] * (T(1) + sc) + sh;
            }
        if (save) h4_ = h4;
        TensorT<T> out = conv2_.forward(silu(h4), save);
        if (skip_) {
            TensorT<T> s = skip_->forward(x, save);
            for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += s.v[i];
        } else {
            for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += x.v[i];
        }
        return out;
    }

    // returns gx; accumulates the embedding gradient into gemb
    TensorT<T> backward(const TensorT<T>& gy, TensorT<T>& gemb) {
        TensorT<T> g_h5 = conv2_.backward(gy);
        TensorT<T> g_h4 = silu_backward(h4_, g_h5);
        // scale/shift backward
        TensorT<T> g_g(g_.n, g_.c, g_.h, g_.w);
        TensorT<T> g_ss(ss_.n, ss_.c, 1, 1);
        for (int in = 0; in < g_.n; ++in)
            for (int c = 0; c < g_.c; ++c) {
                const T sc = ss_.v[in * ss_.item_size() + c];
                const T* gp = g_.chan(in, c);
                const T* gh = g_h4.chan(in, c);
                T* gg = g_g.chan(in, c);
                T dsc = 0, dsh = 0;
                for (std::size_t i = 0; i < g_.plane(); ++i) {
                    gg[i] = gh[i] * (T(1) + sc);
                    dsc += gh[i] * gp[i];
                    dsh += gh[i];
                }
                g_ss.v[in * g_ss.item_size() + c] = dsc;
                g_ss.v[in * g_ss.item_size() + cout_ + c] = dsh;
            }
        TensorT<T> g_es = emb_proj_.backward(g_ss);
        const TensorT<T> g_emb_part = silu_backward(emb_in_, g_es);
        for (std::size_t i = 0; i < gemb.v.size(); ++i) gemb.v[i] += g_emb_part.v[i];

        TensorT<T> g_h = gn2_.backward(g_g);
        TensorT<T> g_b = conv1_.backward(g_h);
        TensorT<T> g_a = silu_backward(a_, g_b);
        TensorT<T> gx = gn1_.backward(g_a);
        if (skip_) {
            TensorT<T> gs = skip_->backward(gy);
            for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += gs.v[i];
        } else {
            for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += gy.v[i];
        }
        return gx;
    }

    void collect(const std::string& prefix, ParamList<T>& out) {
        gn1_.collect(prefix + ".gn1", out);
        conv1_.collect(prefix + ".conv1", out);
        emb_proj_.collect(prefix + ".emb", out);
        gn2_.collect(prefix + ".gn2", out);
        conv2_.collect(prefix + ".conv2", out);
        if (skip_) skip_->collect(prefix + ".skip", out);
    }

private:
    int cin_ = 0, cout_ = 0;
    GroupNorm<T> gn1_, gn2_;
    Conv2d<T> conv1_, conv2_;
    Conv2d<T> emb_proj_;
    std::optional<Conv2d<T>> skip_;
    TensorT<T> a_, g_, ss_, h4_, emb_in_;
};

}  // namespace nn
}  // namespace dal
