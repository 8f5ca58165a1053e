#pragma once

#include "dal/nn.hpp"

namespace dal {

// Architecture descriptor: resolution levels with channels
// base_channels * 2^level, residual blocks per level, sinusoidal
// time-embedding width.
struct ArchConfig {
    int levels = 3;
    int base_channels = 32;
    int blocks_per_level = 2;
    int time_embed_dim = 64;

    bool operator==(const ArchConfig&) const = default;
};

namespace nn {

// Noise-prediction U-Net. Skip connections concatenate the stored down-path
// activations; downsampling is a stride-2 conv, upsampling nearest-2x
// followed by a conv.
template <typename T>
class UNet {
public:
    UNet(const ArchConfig& cfg, Rng& rng) : cfg_(cfg) {
        require(cfg.levels >= 1, "UNet: levels must be >= 1");
        require(cfg.base_channels >= 1, "UNet: base_channels must be >= 1");
        require(cfg.blocks_per_level >= 1, "UNet: blocks_per_level must be >= 1");
        const int E = cfg.time_embed_dim;
        require(E >= 2 && E % 2 == 0, "UNet: time_embed_dim must be even");
        time_mlp1_ = Conv2d<T>(E, E, 1, 1, 0, rng);
        time_mlp2_ = Conv2d<T>(E, E, 1, 1, 0, rng);
        conv_in_ = Conv2d<T>(1, ch(0), 3, 1, 1, rng);
        int c_prev = ch(0);
        for (int l = 0; l < cfg.levels; ++l) {
            for (int b = 0; b < cfg.blocks_per_level; ++b) {
                down_.emplace_back(c_prev, ch(l), E, rng);
                c_prev = ch(l);
            }
            if (l + 1 < cfg.levels) downsample_.emplace_back(ch(l), ch(l), 3, 2, 1, rng);
        }
        mid_.emplace_back(c_prev, c_prev, E, rng);
        mid_.emplace_back(c_prev, c_prev, E, rng);
        for (int l = cfg.levels - 1; l >= 0; --l) {
            for (int b = 0; b <= cfg.blocks_per_level; ++b) {
                const int c_skip = skip_channels(l, b);
                up_.emplace_back(c_prev + c_skip, ch(l), E, rng);
                c_prev = ch(l);
            }
            if (l > 0) upsample_.emplace_back(ch(l), ch(l), 3, 1, 1, rng);
        }
        gn_out_ = GroupNorm<T>(ch(0));
        conv_out_ = Conv2d<T>(ch(0), 1, 3, 1, 1, rng, /*zero_init=*/true);
    }

    const ArchConfig& arch() const { return cfg_; }

    int min_image_size() const { return 1 << (cfg_.levels - 1); }

    // x: (n, 1, d, d); t: one timestep per item (1-based).
    TensorT<T> forward(const TensorT<T>& x, const std::vector<int>& t, bool save = false) {
        require(static_cast<int>(t.size()) == x.n, "UNet: one timestep per batch item");
        require(x.h % min_image_size() == 0 && x.w % min_image_size() == 0,
                "UNet: image size must be divisible by 2^(levels-1)");
        const int B = cfg_.blocks_per_level;

        TensorT<T> e0 = sinusoidal(t);
        if (save) e0_ = e0;
        TensorT<T> e1 = time_mlp1_.forward(e0, save);
        if (save) e1_ = e1;
        TensorT<T> emb = time_mlp2_.forward(silu(e1), save);
        if (save) emb_ = emb;

        std::vector<TensorT<T>> hs;
        TensorT<T> h = conv_in_.forward(x, save);
        hs.push_back(h);
        int di = 0, dci = 0;
        for (int l = 0; l < cfg_.levels; ++l) {
            for (int b = 0; b < B; ++b) {
                h = down_[di++].forward(h, emb, save);
                hs.push_back(h);
            }
            if (l + 1 < cfg_.levels) {
                h = downsample_[dci++].forward(h, save);
                hs.push_back(h);
            }
        }
        h = mid_[0].forward(h, emb, save);
        h = mid_[1].forward(h, emb, save);
        int ui = 0, uci = 0;
        skip_channels_used_.clear();
        for (int l = cfg_.levels - 1; l >= 0; --l) {
            for (int b = 0; b <= B; ++b) {
                TensorT<T> s = std::move(hs.back());
                hs.pop_back();
                skip_channels_used_.push_back(s.c);
                h = up_[ui++].forward(concat_channels(h, s), emb, save);
            }
            if (l > 0) {
                h = upsample_nearest2(h);
                h = upsample_[uci++].forward(h, save);
            }
        }
        TensorT<T> a = gn_out_.forward(h, save);
        if (save) a_out_ = a;
        return conv_out_.forward(silu(a), save);
    }

    // Input gradient of the scalar loss whose output gradient is gy; must
    // follow a forward(..., save=true) call.
    TensorT<T> backward(const TensorT<T>& gy) {
        const int B = cfg_.blocks_per_level;
        TensorT<T> gemb(emb_.n, emb_.c, 1, 1);

        TensorT<T> g = conv_out_.backward(gy);
        g = silu_backward(a_out_, g);
        TensorT<T> gh = gn_out_.backward(g);

        // Up path in reverse. The last forward up-block consumed the first
        // push, so gradients come out here already in push order.
        std::vector<TensorT<T>> skip_grads;
        int ui = static_cast<int>(up_.size());
        int uci = static_cast<int>(upsample_.size());
        int used = static_cast<int>(skip_channels_used_.size());
        for (int l = 0; l <= cfg_.levels - 1; ++l) {
            if (l > 0) {
                gh = upsample_[--uci].backward(gh);
                gh = upsample_nearest2_backward(gh);
            }
            for (int b = 0; b <= B; ++b) {
                TensorT<T> gcat = up_[--ui].backward(gh, gemb);
                const int c_skip = skip_channels_used_[--used];
                TensorT<T> ga, gs;
                split_channels(gcat, gcat.c - c_skip, ga, gs);
                gh = std::move(ga);
                skip_grads.push_back(std::move(gs));
            }
        }

        gh = mid_[1].backward(gh, gemb);
        gh = mid_[0].backward(gh, gemb);

        // Down path in reverse; each pushed tensor also fed a concat, so add
        // the stored skip gradient before backing through its producer.
        int pi = static_cast<int>(skip_grads.size()) - 1;
        int di = static_cast<int>(down_.size());
        int dci = static_cast<int>(downsample_.size());
        for (int l = cfg_.levels - 1; l >= 0; --l) {
            if (l + 1 < cfg_.levels) {
                gh = add(gh, skip_grads[pi--]);
                gh = downsample_[--dci].backward(gh);
            }
            for (int b = B - 1; b >= 0; --b) {
                gh = add(gh, skip_grads[pi--]);
                gh = down_[--di].backward(gh, gemb);
            }
        }
        gh = add(gh, skip_grads[0]);
        TensorT<T> gx = conv_in_.backward(gh);

        TensorT<T> ge = time_mlp2_.backward(gemb);
        ge = silu_backward(e1_, ge);
        time_mlp1_.backward(ge);
        return gx;
    }

    void collect(ParamList<T>& out) {
        time_mlp1_.collect("time.mlp1", out);
        time_mlp2_.collect("time.mlp2", out);
        conv_in_.collect("conv_in", out);
        for (std::size_t i = 0; i < down_.size(); ++i)
            down_[i].collect("down.block" + std::to_string(i), out);
        for (std::size_t i = 0; i < downsample_.size(); ++i)
            downsample_[i].collect("down.sample" + std::to_string(i), out);
        mid_[0].collect("mid.block0", out);
        mid_[1].collect("mid.block1", out);
        for (std::size_t i = 0; i < up_.size(); ++i)
            up_[i].collect("up.block" + std::to_string(i), out);
        for (std::size_t i = 0; i < upsample_.size(); ++i)
            upsample_[i].collect("up.sample" + std::to_string(i), out);
        gn_out_.collect("out.gn", out);
        conv_out_.collect("out.conv", out);
    }

    ParamList<T> params() {
        ParamList<T> list;
        collect(list);
        return list;
    }

private:
    int ch(int level) const { return cfg_.base_channels << level; }

    int skip_channels(int level, int b) const {
        // channels of the popped skip for up-block b of `level`
        const int B = cfg_.blocks_per_level;
        if (b < B) return ch(level);  // block outputs (b<B-1) or downsample output (l<L-1)
        return level > 0 ? ch(level - 1) : ch(0);
    }

    static TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
        TensorT<T> out = a;
        for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += b.v[i];
        return out;
    }

    TensorT<T> sinusoidal(const std::vector<int>& t) const {
        const int E = cfg_.time_embed_dim;
        const int half = E / 2;
        TensorT<T> e(static_cast<int>(t.size()), E, 1, 1);
        for (std::size_t in = 0; in < t.size(); ++in) {
            for (int i = 0; i < half; ++i) {
                const double f = std::exp(-std::log(10000.0) * i / std::max(1, half - 1));
                e.v[in * E + i] = static_cast<T>(std::sin(t[in] * f));
                e.v[in * E + half + i] = static_cast<T>(std::cos(t[in] * f));
            }
        }
        return e;
    }

    ArchConfig cfg_;
    Conv2d<T> conv_in_, conv_out_;
    Conv2d<T> time_mlp1_, time_mlp2_;
    GroupNorm<T> gn_out_;
    std::vector<ResBlock<T>> down_;
    std::vector<Conv2d<T>> downsample_;
    std::vector<ResBlock<T>> mid_;
    std::vector<ResBlock<T>> up_;
    std::vector<Conv2d<T>> upsample_;
    TensorT<T> e0_, e1_, emb_, a_out_;
    std::vector<int> skip_channels_used_;
};

}  // namespace nn
}  // namespace dal
