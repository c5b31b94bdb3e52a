#pragma once

#include <cstddef>
#include <vector>

#include "cwsep/errors.hpp"

namespace cwsep {

/// Dense NCHW tensor: batch, channels, frequency (H), time (W).
template <typename T>
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<std::size_t>(n_) * c_ * h_ * w_, T(0)) {
        if (n_ < 1 || c_ < 1 || h_ < 1 || w_ < 1)
            throw shape_error("Tensor4: all dimensions must be at least 1");
    }

    std::size_t size() const { return data.size(); }
    std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }

    T* plane(int i, int j) {
        return data.data() + (static_cast<std::size_t>(i) * c + j) * plane_size();
    }
    const T* plane(int i, int j) const {
        return data.data() + (static_cast<std::size_t>(i) * c + j) * plane_size();
    }

    T& at(int i, int j, int y, int x) { return plane(i, j)[static_cast<std::size_t>(y) * w + x]; }
    const T& at(int i, int j, int y, int x) const {
        return plane(i, j)[static_cast<std::size_t>(y) * w + x];
    }

    bool same_shape(const Tensor4& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
};

} // namespace cwsep
