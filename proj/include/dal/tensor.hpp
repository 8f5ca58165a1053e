#pragma once

#include <vector>

#include "dal/common.hpp"

namespace dal {

// Dense NCHW tensor; scalar type is a template parameter so the same layer
// code runs in float for training/inference and in double for the
// finite-difference gradient checks.
template <typename T>
struct TensorT {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    TensorT() = default;
    TensorT(int n_, int c_, int h_, int w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_), v(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

    std::size_t count() const { return v.size(); }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    std::size_t item_size() const { return static_cast<std::size_t>(c) * h * w; }

    T* item(int in) { return v.data() + in * item_size(); }
    const T* item(int in) const { return v.data() + in * item_size(); }
    T* chan(int in, int ic) { return item(in) + ic * plane(); }
    const T* chan(int in, int ic) const { return item(in) + ic * plane(); }

    bool same_shape(const TensorT& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    void zero() { std::fill(v.begin(), v.end(), T(0)); }
};

using Tensor = TensorT<float>;

template <typename T>
TensorT<T> concat_channels(const TensorT<T>& a, const TensorT<T>& b) {
    require(a.n == b.n && a.h == b.h && a.w == b.w, "concat_channels: shape mismatch");
    TensorT<T> out(a.n, a.c + b.c, a.h, a.w);
    for (int in = 0; in < a.n; ++in) {
        std::copy(a.item(in), a.item(in) + a.item_size(), out.item(in));
        std::copy(b.item(in), b.item(in) + b.item_size(), out.item(in) + a.item_size());
    }
    return out;
}

template <typename T>
void split_channels(const TensorT<T>& g, int c_first, TensorT<T>& ga, TensorT<T>& gb) {
    ga = TensorT<T>(g.n, c_first, g.h, g.w);
    gb = TensorT<T>(g.n, g.c - c_first, g.h, g.w);
    for (int in = 0; in < g.n; ++in) {
        std::copy(g.item(in), g.item(in) + ga.item_size(), ga.item(in));
        std::copy(g.item(in) + ga.item_size(), g.item(in) + g.item_size(), gb.item(in));
    }
}

}  // namespace dal
