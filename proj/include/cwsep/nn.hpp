#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cwsep/errors.hpp"
#include "cwsep/tensor.hpp"

namespace cwsep {

enum class LayerKind {
    input,
    conv3x3,
    conv1x1,
    batchnorm,
    relu,
    maxpool2,
    upsample2_linear,
    sigmoid,
    dropout,
    concat,
};

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
    case LayerKind::input: return "input";
    case LayerKind::conv3x3: return "conv3x3";
    case LayerKind::conv1x1: return "conv1x1";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool2: return "maxpool2";
    case LayerKind::upsample2_linear: return "upsample2_linear";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::dropout: return "dropout";
    case LayerKind::concat: return "concat";
    }
    return "?";
}

struct LayerSpec {
    LayerKind kind = LayerKind::input;
    int in_channels = 0;
    int out_channels = 0;
    int input = -1; // producing node
    int skip = -1;  // second input (concat only)
    double rate = 0.0; // dropout only
};

constexpr double kBnEpsilon = 1e-5;
constexpr double kBnMomentum = 0.1;

/// Layered CNN with explicit skip topology, parameters and gradients.
/// Nodes are stored in topological order; node 0 is the input.
template <typename T>
struct NetworkGraph {
    struct ParamSet {
        std::vector<T> w, b;                    // conv kernels and biases
        std::vector<T> gamma, beta;             // batchnorm affine terms
        std::vector<T> run_mean, run_var;       // batchnorm running stats
    };
    struct GradSet {
        std::vector<T> w, b, gamma, beta;
    };
    struct NodeCache {
        Tensor4<T> act;
        std::vector<int> argmax;     // maxpool
        std::vector<T> mask;         // dropout
        std::vector<T> bn_mean, bn_invstd;
    };

    std::vector<LayerSpec> layers;
    std::vector<ParamSet> params;
    std::vector<GradSet> grads;
    int output = 0;
    int pad_multiple = 1;
    std::string meta; // builder description, part of the fingerprint
    std::uint64_t seed = 0;
    std::mt19937_64 rng;

    // forward cache for backward()
    std::vector<NodeCache> cache;
    bool has_cache = false;
    bool cache_training = false;
    bool output_cropped = false;
    int orig_h = 0, orig_w = 0;

    int in_channels() const { return layers.empty() ? 0 : layers[0].out_channels; }
    int out_channels() const { return layers[static_cast<std::size_t>(output)].out_channels; }
};

namespace nndetail {

inline int pad_up(int v, int multiple) {
    return (v + multiple - 1) / multiple * multiple;
}

inline int fold_reflect(int idx, int n) {
    // mirror about the ends without repeating the edge sample
    while (idx < 0 || idx >= n) {
        if (idx < 0) idx = -idx;
        if (idx >= n) idx = 2 * n - 2 - idx;
    }
    return idx;
}

template <typename T>
Tensor4<T> reflect_pad(const Tensor4<T>& x, int ph, int pw) {
    if (ph == x.h && pw == x.w) return x;
    Tensor4<T> out(x.n, x.c, ph, pw);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.c; ++j) {
            const T* src = x.plane(i, j);
            T* dst = out.plane(i, j);
            for (int y = 0; y < ph; ++y) {
                const int sy = fold_reflect(y, x.h);
                for (int xx = 0; xx < pw; ++xx)
                    dst[static_cast<std::size_t>(y) * pw + xx] =
                        src[static_cast<std::size_t>(sy) * x.w + fold_reflect(xx, x.w)];
            }
        }
    return out;
}

template <typename T>
Tensor4<T> crop(const Tensor4<T>& x, int h, int w) {
    if (h == x.h && w == x.w) return x;
    Tensor4<T> out(x.n, x.c, h, w);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.c; ++j)
            for (int y = 0; y < h; ++y) {
                const T* src = x.plane(i, j) + static_cast<std::size_t>(y) * x.w;
                std::copy(src, src + w, out.plane(i, j) + static_cast<std::size_t>(y) * w);
            }
    return out;
}

template <typename T>
Tensor4<T> zero_pad(const Tensor4<T>& x, int h, int w) {
    if (h == x.h && w == x.w) return x;
    Tensor4<T> out(x.n, x.c, h, w);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.c; ++j)
            for (int y = 0; y < x.h; ++y) {
                const T* src = x.plane(i, j) + static_cast<std::size_t>(y) * x.w;
                std::copy(src, src + x.w, out.plane(i, j) + static_cast<std::size_t>(y) * w);
            }
    return out;
}

// --- conv3x3, stride 1, padding 1 ---

template <typename T>
void conv3x3_forward(const Tensor4<T>& in, const std::vector<T>& w, const std::vector<T>& b,
                     Tensor4<T>& out) {
    const int H = in.h, W = in.w;
    for (int n = 0; n < in.n; ++n)
        for (int co = 0; co < out.c; ++co) {
            T* dst = out.plane(n, co);
            std::fill(dst, dst + out.plane_size(), b[static_cast<std::size_t>(co)]);
            for (int ci = 0; ci < in.c; ++ci) {
                const T* src = in.plane(n, ci);
                const T* k9 = w.data() + (static_cast<std::size_t>(co) * in.c + ci) * 9;
                for (int ky = -1; ky <= 1; ++ky) {
                    const int ys = std::max(0, -ky), ye = H - std::max(0, ky);
                    for (int kx = -1; kx <= 1; ++kx) {
                        const T kv = k9[(ky + 1) * 3 + (kx + 1)];
                        if (kv == T(0)) continue;
                        const int xs = std::max(0, -kx), xe = W - std::max(0, kx);
                        for (int y = ys; y < ye; ++y) {
                            const T* s = src + static_cast<std::size_t>(y + ky) * W + (xs + kx);
                            T* d = dst + static_cast<std::size_t>(y) * W + xs;
                            const int len = xe - xs;
                            for (int x = 0; x < len; ++x) d[x] += kv * s[x];
                        }
                    }
                }
            }
        }
}

template <typename T>
void conv3x3_backward(const Tensor4<T>& in, const std::vector<T>& w, const Tensor4<T>& dout,
                      Tensor4<T>& din, std::vector<T>& dw, std::vector<T>& db) {
    const int H = in.h, W = in.w;
    for (int n = 0; n < in.n; ++n)
        for (int co = 0; co < dout.c; ++co) {
            const T* g = dout.plane(n, co);
            T acc_b = T(0);
            for (std::size_t i = 0; i < dout.plane_size(); ++i) acc_b += g[i];
            db[static_cast<std::size_t>(co)] += acc_b;
            for (int ci = 0; ci < in.c; ++ci) {
                const T* src = in.plane(n, ci);
                T* dsrc = din.plane(n, ci);
                const std::size_t base = (static_cast<std::size_t>(co) * in.c + ci) * 9;
                const T* k9 = w.data() + base;
                for (int ky = -1; ky <= 1; ++ky) {
                    const int ys = std::max(0, -ky), ye = H - std::max(0, ky);
                    for (int kx = -1; kx <= 1; ++kx) {
                        const int xs = std::max(0, -kx), xe = W - std::max(0, kx);
                        const int len = xe - xs;
                        const T kv = k9[(ky + 1) * 3 + (kx + 1)];
                        T acc_w = T(0);
                        for (int y = ys; y < ye; ++y) {
                            const T* s = src + static_cast<std::size_t>(y + ky) * W + (xs + kx);
                            T* ds = dsrc + static_cast<std::size_t>(y + ky) * W + (xs + kx);
                            const T* gr = g + static_cast<std::size_t>(y) * W + xs;
                            for (int x = 0; x < len; ++x) {
                                acc_w += gr[x] * s[x];
                                ds[x] += kv * gr[x];
                            }
                        }
                        dw[base + static_cast<std::size_t>((ky + 1) * 3 + (kx + 1))] += acc_w;
                    }
                }
            }
        }
}

// --- conv1x1 ---

template <typename T>
void conv1x1_forward(const Tensor4<T>& in, const std::vector<T>& w, const std::vector<T>& b,
                     Tensor4<T>& out) {
    const std::size_t ps = in.plane_size();
    for (int n = 0; n < in.n; ++n)
        for (int co = 0; co < out.c; ++co) {
            T* dst = out.plane(n, co);
            std::fill(dst, dst + ps, b[static_cast<std::size_t>(co)]);
            for (int ci = 0; ci < in.c; ++ci) {
                const T kv = w[static_cast<std::size_t>(co) * in.c + ci];
                const T* src = in.plane(n, ci);
                for (std::size_t i = 0; i < ps; ++i) dst[i] += kv * src[i];
            }
        }
}

template <typename T>
void conv1x1_backward(const Tensor4<T>& in, const std::vector<T>& w, const Tensor4<T>& dout,
                      Tensor4<T>& din, std::vector<T>& dw, std::vector<T>& db) {
    const std::size_t ps = in.plane_size();
    for (int n = 0; n < in.n; ++n)
        for (int co = 0; co < dout.c; ++co) {
            const T* g = dout.plane(n, co);
            T acc_b = T(0);
            for (std::size_t i = 0; i < ps; ++i) acc_b += g[i];
            db[static_cast<std::size_t>(co)] += acc_b;
            for (int ci = 0; ci < in.c; ++ci) {
                const T kv = w[static_cast<std::size_t>(co) * in.c + ci];
                const T* src = in.plane(n, ci);
                T* ds = din.plane(n, ci);
                T acc_w = T(0);
                for (std::size_t i = 0; i < ps; ++i) {
                    acc_w += g[i] * src[i];
                    ds[i] += kv * g[i];
                }
                dw[static_cast<std::size_t>(co) * in.c + ci] += acc_w;
            }
        }
}

// --- bilinear x2 upsampling, align_corners = false ---

struct LinearTap {
    int i0, i1;
    double w0, w1;
};

inline std::vector<LinearTap> upsample_taps(int src_len) {
    std::vector<LinearTap> taps(static_cast<std::size_t>(2 * src_len));
    for (int d = 0; d < 2 * src_len; ++d) {
        const double s = (d + 0.5) / 2.0 - 0.5;
        const int i0 = static_cast<int>(std::floor(s));
        const double w1 = s - i0;
        taps[static_cast<std::size_t>(d)] = {std::clamp(i0, 0, src_len - 1),
                                             std::clamp(i0 + 1, 0, src_len - 1), 1.0 - w1, w1};
    }
    return taps;
}

} // namespace nndetail

template <typename T>
void zero_grads(NetworkGraph<T>& net) {
    for (auto& g : net.grads) {
        std::fill(g.w.begin(), g.w.end(), T(0));
        std::fill(g.b.begin(), g.b.end(), T(0));
        std::fill(g.gamma.begin(), g.gamma.end(), T(0));
        std::fill(g.beta.begin(), g.beta.end(), T(0));
    }
}

/// Runs the graph on x. Spatial dims are reflect-padded up to the graph's
/// pad multiple and the result is cropped back, so shapes are preserved
/// for any input. Activations are cached for backward().
template <typename T>
Tensor4<T> forward(NetworkGraph<T>& net, const Tensor4<T>& x, bool training) {
    if (x.c != net.in_channels())
        throw shape_error("forward: input has " + std::to_string(x.c) + " channels, graph expects " +
                          std::to_string(net.in_channels()));

    net.cache.assign(net.layers.size(), typename NetworkGraph<T>::NodeCache{});
    net.orig_h = x.h;
    net.orig_w = x.w;
    net.has_cache = true;
    net.cache_training = training;

    const int ph = nndetail::pad_up(x.h, net.pad_multiple);
    const int pw = nndetail::pad_up(x.w, net.pad_multiple);
    net.cache[0].act = nndetail::reflect_pad(x, ph, pw);

    for (std::size_t id = 1; id < net.layers.size(); ++id) {
        const LayerSpec& spec = net.layers[id];
        const Tensor4<T>& in = net.cache[static_cast<std::size_t>(spec.input)].act;
        auto& node = net.cache[id];
        auto& par = net.params[id];

        switch (spec.kind) {
        case LayerKind::conv3x3:
            node.act = Tensor4<T>(in.n, spec.out_channels, in.h, in.w);
            nndetail::conv3x3_forward(in, par.w, par.b, node.act);
            break;
        case LayerKind::conv1x1:
            node.act = Tensor4<T>(in.n, spec.out_channels, in.h, in.w);
            nndetail::conv1x1_forward(in, par.w, par.b, node.act);
            break;
        case LayerKind::batchnorm: {
            node.act = Tensor4<T>(in.n, in.c, in.h, in.w);
            node.bn_mean.resize(static_cast<std::size_t>(in.c));
            node.bn_invstd.resize(static_cast<std::size_t>(in.c));
            const std::size_t m = static_cast<std::size_t>(in.n) * in.plane_size();
            for (int j = 0; j < in.c; ++j) {
                T mean, invstd;
                if (training) {
                    T sum = T(0), sq = T(0);
                    for (int n = 0; n < in.n; ++n) {
                        const T* s = in.plane(n, j);
                        for (std::size_t i = 0; i < in.plane_size(); ++i) {
                            sum += s[i];
                            sq += s[i] * s[i];
                        }
                    }
                    mean = sum / static_cast<T>(m);
                    const T var = std::max(T(0), sq / static_cast<T>(m) - mean * mean);
                    invstd = T(1) / std::sqrt(var + static_cast<T>(kBnEpsilon));
                    par.run_mean[static_cast<std::size_t>(j)] =
                        static_cast<T>(1.0 - kBnMomentum) * par.run_mean[static_cast<std::size_t>(j)] +
                        static_cast<T>(kBnMomentum) * mean;
                    par.run_var[static_cast<std::size_t>(j)] =
                        static_cast<T>(1.0 - kBnMomentum) * par.run_var[static_cast<std::size_t>(j)] +
                        static_cast<T>(kBnMomentum) * var;
                } else {
                    mean = par.run_mean[static_cast<std::size_t>(j)];
                    invstd = T(1) / std::sqrt(par.run_var[static_cast<std::size_t>(j)] +
                                              static_cast<T>(kBnEpsilon));
                }
                node.bn_mean[static_cast<std::size_t>(j)] = mean;
                node.bn_invstd[static_cast<std::size_t>(j)] = invstd;
                const T g = par.gamma[static_cast<std::size_t>(j)];
                const T be = par.beta[static_cast<std::size_t>(j)];
                for (int n = 0; n < in.n; ++n) {
                    const T* s = in.plane(n, j);
                    T* d = node.act.plane(n, j);
                    for (std::size_t i = 0; i < in.plane_size(); ++i)
                        d[i] = g * (s[i] - mean) * invstd + be;
                }
            }
            break;
        }
        case LayerKind::relu:
            node.act = in;
            for (auto& v : node.act.data) v = std::max(T(0), v);
            break;
        case LayerKind::maxpool2: {
            node.act = Tensor4<T>(in.n, in.c, in.h / 2, in.w / 2);
            node.argmax.resize(node.act.size());
            std::size_t o = 0;
            for (int n = 0; n < in.n; ++n)
                for (int j = 0; j < in.c; ++j) {
                    const T* s = in.plane(n, j);
                    T* d = node.act.plane(n, j);
                    for (int y = 0; y < node.act.h; ++y)
                        for (int xx = 0; xx < node.act.w; ++xx) {
                            const int iy = 2 * y, ix = 2 * xx;
                            int best = iy * in.w + ix;
                            T bv = s[best];
                            const int cand[3] = {iy * in.w + ix + 1, (iy + 1) * in.w + ix,
                                                 (iy + 1) * in.w + ix + 1};
                            for (int cdx : cand)
                                if (s[cdx] > bv) {
                                    bv = s[cdx];
                                    best = cdx;
                                }
                            d[static_cast<std::size_t>(y) * node.act.w + xx] = bv;
                            node.argmax[o++] = best;
                        }
                }
            break;
        }
        case LayerKind::upsample2_linear: {
            node.act = Tensor4<T>(in.n, in.c, in.h * 2, in.w * 2);
            const auto ty = nndetail::upsample_taps(in.h);
            const auto tx = nndetail::upsample_taps(in.w);
            for (int n = 0; n < in.n; ++n)
                for (int j = 0; j < in.c; ++j) {
                    const T* s = in.plane(n, j);
                    T* d = node.act.plane(n, j);
                    for (int y = 0; y < node.act.h; ++y) {
                        const auto& ay = ty[static_cast<std::size_t>(y)];
                        for (int xx = 0; xx < node.act.w; ++xx) {
                            const auto& ax = tx[static_cast<std::size_t>(xx)];
                            d[static_cast<std::size_t>(y) * node.act.w + xx] = static_cast<T>(
                                ay.w0 * (ax.w0 * s[ay.i0 * in.w + ax.i0] + ax.w1 * s[ay.i0 * in.w + ax.i1]) +
                                ay.w1 * (ax.w0 * s[ay.i1 * in.w + ax.i0] + ax.w1 * s[ay.i1 * in.w + ax.i1]));
                        }
                    }
                }
            break;
        }
        case LayerKind::sigmoid:
            node.act = in;
            for (auto& v : node.act.data) v = T(1) / (T(1) + std::exp(-v));
            break;
        case LayerKind::dropout: {
            node.act = in;
            if (training && spec.rate > 0.0) {
                node.mask.resize(in.size());
                std::uniform_real_distribution<double> u(0.0, 1.0);
                const T keep_scale = static_cast<T>(1.0 / (1.0 - spec.rate));
                for (std::size_t i = 0; i < in.size(); ++i) {
                    node.mask[i] = u(net.rng) < spec.rate ? T(0) : keep_scale;
                    node.act.data[i] *= node.mask[i];
                }
            }
            break;
        }
        case LayerKind::concat: {
            const Tensor4<T>& skip = net.cache[static_cast<std::size_t>(spec.skip)].act;
            if (skip.h != in.h || skip.w != in.w || skip.n != in.n)
                throw shape_error("forward: concat inputs disagree on spatial dims");
            node.act = Tensor4<T>(in.n, in.c + skip.c, in.h, in.w);
            for (int n = 0; n < in.n; ++n) {
                std::copy(in.plane(n, 0), in.plane(n, 0) + in.plane_size() * in.c,
                          node.act.plane(n, 0));
                std::copy(skip.plane(n, 0), skip.plane(n, 0) + skip.plane_size() * skip.c,
                          node.act.plane(n, in.c));
            }
            break;
        }
        case LayerKind::input:
            throw state_error("forward: unexpected input node");
        }
    }

    // crop back only when the output lives at the (padded) input resolution
    const Tensor4<T>& out_act = net.cache[static_cast<std::size_t>(net.output)].act;
    net.output_cropped = out_act.h == ph && out_act.w == pw;
    if (net.output_cropped) return nndetail::crop(out_act, net.orig_h, net.orig_w);
    return out_act;
}

/// Reverse-mode pass. `out_grad` is dL/d(output) at the cropped output
/// shape; parameter gradients are accumulated into net.grads.
template <typename T>
void backward(NetworkGraph<T>& net, const Tensor4<T>& out_grad) {
    if (!net.has_cache) throw state_error("backward: no cached forward pass");
    const Tensor4<T>& out_act = net.cache[static_cast<std::size_t>(net.output)].act;
    const int want_h = net.output_cropped ? net.orig_h : out_act.h;
    const int want_w = net.output_cropped ? net.orig_w : out_act.w;
    if (out_grad.c != out_act.c || out_grad.h != want_h || out_grad.w != want_w ||
        out_grad.n != out_act.n)
        throw shape_error("backward: gradient shape does not match output");

    std::vector<Tensor4<T>> act_grads(net.layers.size());
    act_grads[static_cast<std::size_t>(net.output)] =
        nndetail::zero_pad(out_grad, out_act.h, out_act.w);

    for (std::size_t id = net.layers.size(); id-- > 1;) {
        const LayerSpec& spec = net.layers[id];
        Tensor4<T>& dout = act_grads[id];
        if (dout.size() == 0) continue; // node does not feed the output
        const Tensor4<T>& in = net.cache[static_cast<std::size_t>(spec.input)].act;
        auto& node = net.cache[id];
        auto& par = net.params[id];
        auto& grad = net.grads[id];
        Tensor4<T>& din = act_grads[static_cast<std::size_t>(spec.input)];
        if (din.size() == 0) din = Tensor4<T>(in.n, in.c, in.h, in.w);

        switch (spec.kind) {
        case LayerKind::conv3x3:
            nndetail::conv3x3_backward(in, par.w, dout, din, grad.w, grad.b);
            break;
        case LayerKind::conv1x1:
            nndetail::conv1x1_backward(in, par.w, dout, din, grad.w, grad.b);
            break;
        case LayerKind::batchnorm: {
            const std::size_t m = static_cast<std::size_t>(in.n) * in.plane_size();
            for (int j = 0; j < in.c; ++j) {
                const T mean = node.bn_mean[static_cast<std::size_t>(j)];
                const T invstd = node.bn_invstd[static_cast<std::size_t>(j)];
                const T g = par.gamma[static_cast<std::size_t>(j)];
                T sum_dy = T(0), sum_dy_xhat = T(0);
                for (int n = 0; n < in.n; ++n) {
                    const T* dy = dout.plane(n, j);
                    const T* s = in.plane(n, j);
                    for (std::size_t i = 0; i < in.plane_size(); ++i) {
                        sum_dy += dy[i];
                        sum_dy_xhat += dy[i] * (s[i] - mean) * invstd;
                    }
                }
                grad.beta[static_cast<std::size_t>(j)] += sum_dy;
                grad.gamma[static_cast<std::size_t>(j)] += sum_dy_xhat;
                if (net.cache_training) {
                    const T scale = g * invstd / static_cast<T>(m);
                    for (int n = 0; n < in.n; ++n) {
                        const T* dy = dout.plane(n, j);
                        const T* s = in.plane(n, j);
                        T* dx = din.plane(n, j);
                        for (std::size_t i = 0; i < in.plane_size(); ++i) {
                            const T xhat = (s[i] - mean) * invstd;
                            dx[i] += scale * (static_cast<T>(m) * dy[i] - sum_dy - xhat * sum_dy_xhat);
                        }
                    }
                } else {
                    const T scale = g * invstd;
                    for (int n = 0; n < in.n; ++n) {
                        const T* dy = dout.plane(n, j);
                        T* dx = din.plane(n, j);
                        for (std::size_t i = 0; i < in.plane_size(); ++i) dx[i] += scale * dy[i];
                    }
                }
            }
            break;
        }
        case LayerKind::relu:
            for (std::size_t i = 0; i < din.size(); ++i)
                if (node.act.data[i] > T(0)) din.data[i] += dout.data[i];
            break;
        case LayerKind::maxpool2: {
            std::size_t o = 0;
            for (int n = 0; n < node.act.n; ++n)
                for (int j = 0; j < node.act.c; ++j) {
                    T* ds = din.plane(n, j);
                    const T* g2 = dout.plane(n, j);
                    for (std::size_t i = 0; i < node.act.plane_size(); ++i)
                        ds[node.argmax[o++]] += g2[i];
                }
            break;
        }
        case LayerKind::upsample2_linear: {
            const auto ty = nndetail::upsample_taps(in.h);
            const auto tx = nndetail::upsample_taps(in.w);
            for (int n = 0; n < in.n; ++n)
                for (int j = 0; j < in.c; ++j) {
                    T* ds = din.plane(n, j);
                    const T* g2 = dout.plane(n, j);
                    for (int y = 0; y < dout.h; ++y) {
                        const auto& ay = ty[static_cast<std::size_t>(y)];
                        for (int xx = 0; xx < dout.w; ++xx) {
                            const auto& ax = tx[static_cast<std::size_t>(xx)];
                            const T gv = g2[static_cast<std::size_t>(y) * dout.w + xx];
                            ds[ay.i0 * in.w + ax.i0] += static_cast<T>(ay.w0 * ax.w0) * gv;
                            ds[ay.i0 * in.w + ax.i1] += static_cast<T>(ay.w0 * ax.w1) * gv;
                            ds[ay.i1 * in.w + ax.i0] += static_cast<T>(ay.w1 * ax.w0) * gv;
                            ds[ay.i1 * in.w + ax.i1] += static_cast<T>(ay.w1 * ax.w1) * gv;
                        }
                    }
                }
            break;
        }
        case LayerKind::sigmoid:
            for (std::size_t i = 0; i < din.size(); ++i) {
                const T y = node.act.data[i];
                din.data[i] += dout.data[i] * y * (T(1) - y);
            }
            break;
        case LayerKind::dropout:
            if (!node.mask.empty())
                for (std::size_t i = 0; i < din.size(); ++i) din.data[i] += dout.data[i] * node.mask[i];
            else
                for (std::size_t i = 0; i < din.size(); ++i) din.data[i] += dout.data[i];
            break;
        case LayerKind::concat: {
            const Tensor4<T>& skip = net.cache[static_cast<std::size_t>(spec.skip)].act;
            Tensor4<T>& dskip = act_grads[static_cast<std::size_t>(spec.skip)];
            if (dskip.size() == 0) dskip = Tensor4<T>(skip.n, skip.c, skip.h, skip.w);
            for (int n = 0; n < dout.n; ++n) {
                const T* g2 = dout.plane(n, 0);
                T* dmain = din.plane(n, 0);
                for (std::size_t i = 0; i < din.plane_size() * in.c; ++i) dmain[i] += g2[i];
                const T* g3 = dout.plane(n, in.c);
                T* dsk = dskip.plane(n, 0);
                for (std::size_t i = 0; i < dskip.plane_size() * skip.c; ++i) dsk[i] += g3[i];
            }
            break;
        }
        case LayerKind::input:
            throw state_error("backward: unexpected input node");
        }

        dout = Tensor4<T>(); // release as we go
    }
}

/// Iterates all trainable parameter arrays with their gradients, in
/// declaration order. fn(name, params, grads).
template <typename T, typename Fn>
void for_each_param(NetworkGraph<T>& net, Fn&& fn) {
    for (std::size_t id = 0; id < net.layers.size(); ++id) {
        auto& p = net.params[id];
        auto& g = net.grads[id];
        const std::string base = "node" + std::to_string(id) + "." + layer_kind_name(net.layers[id].kind);
        if (!p.w.empty()) fn(base + ".w", p.w, g.w);
        if (!p.b.empty()) fn(base + ".b", p.b, g.b);
        if (!p.gamma.empty()) fn(base + ".gamma", p.gamma, g.gamma);
        if (!p.beta.empty()) fn(base + ".beta", p.beta, g.beta);
    }
}

} // namespace cwsep
