#pragma once

#include <cmath>
#include <string>

#include "cwsep/nn.hpp"

namespace cwsep {

namespace nndetail {

template <typename T>
class NetBuilder {
public:
    NetBuilder(int in_channels) {
        LayerSpec input;
        input.kind = LayerKind::input;
        input.in_channels = in_channels;
        input.out_channels = in_channels;
        net_.layers.push_back(input);
        net_.params.emplace_back();
        net_.grads.emplace_back();
    }

    int add(LayerKind kind, int input, int out_channels = 0, int skip = -1, double rate = 0.0) {
        LayerSpec spec;
        spec.kind = kind;
        spec.input = input;
        spec.skip = skip;
        spec.rate = rate;
        spec.in_channels = net_.layers[static_cast<std::size_t>(input)].out_channels;
        if (skip >= 0) spec.in_channels += net_.layers[static_cast<std::size_t>(skip)].out_channels;
        spec.out_channels = out_channels > 0 ? out_channels : spec.in_channels;

        typename NetworkGraph<T>::ParamSet p;
        typename NetworkGraph<T>::GradSet g;
        if (kind == LayerKind::conv3x3 || kind == LayerKind::conv1x1) {
            const int k2 = kind == LayerKind::conv3x3 ? 9 : 1;
            p.w.assign(static_cast<std::size_t>(spec.out_channels) * spec.in_channels * k2, T(0));
            p.b.assign(static_cast<std::size_t>(spec.out_channels), T(0));
            g.w = p.w;
            g.b = p.b;
        } else if (kind == LayerKind::batchnorm) {
            p.gamma.assign(static_cast<std::size_t>(spec.out_channels), T(1));
            p.beta.assign(static_cast<std::size_t>(spec.out_channels), T(0));
            p.run_mean.assign(static_cast<std::size_t>(spec.out_channels), T(0));
            p.run_var.assign(static_cast<std::size_t>(spec.out_channels), T(1));
            g.gamma.assign(static_cast<std::size_t>(spec.out_channels), T(0));
            g.beta.assign(static_cast<std::size_t>(spec.out_channels), T(0));
        }
        net_.layers.push_back(spec);
        net_.params.push_back(std::move(p));
        net_.grads.push_back(std::move(g));
        return static_cast<int>(net_.layers.size()) - 1;
    }

    /// conv3x3 + BN + ReLU
    int conv_bn_relu(int input, int out_channels) {
        int id = add(LayerKind::conv3x3, input, out_channels);
        id = add(LayerKind::batchnorm, id);
        return add(LayerKind::relu, id);
    }

    /// Two conv3x3+BN+ReLU stages followed by dropout.
    int double_conv(int input, int mid_channels, int out_channels, double rate) {
        int id = conv_bn_relu(input, mid_channels);
        id = conv_bn_relu(id, out_channels);
        return add(LayerKind::dropout, id, 0, -1, rate);
    }

    /// Dense block: n conv3x3+BN+ReLU(+dropout) layers of `growth` channels
    /// each; layer i sees the block input concatenated with all previous
    /// layer outputs (in + i*growth channels). The block emits the
    /// concatenation of the n layer outputs.
    int dense_block(int input, int growth, int n_layers, double rate) {
        int feat = input;
        std::vector<int> outs;
        for (int i = 0; i < n_layers; ++i) {
            int id = conv_bn_relu(feat, growth);
            id = add(LayerKind::dropout, id, 0, -1, rate);
            outs.push_back(id);
            if (i + 1 < n_layers) feat = add(LayerKind::concat, feat, 0, id);
        }
        int out = outs[0];
        for (std::size_t i = 1; i < outs.size(); ++i)
            out = add(LayerKind::concat, out, 0, outs[i]);
        return out;
    }

    NetworkGraph<T> finish(int output, int pad_multiple, std::string meta, std::uint64_t seed) {
        net_.output = output;
        net_.pad_multiple = pad_multiple;
        net_.meta = std::move(meta);
        net_.seed = seed;
        net_.rng.seed(seed);
        init_params();
        return std::move(net_);
    }

private:
    /// Kaiming-uniform fan-in for conv kernels, zero biases, identity BN.
    void init_params() {
        constexpr double kInv53 = 1.0 / 9007199254740992.0; // 2^-53
        for (std::size_t id = 0; id < net_.layers.size(); ++id) {
            const LayerSpec& spec = net_.layers[id];
            if (spec.kind != LayerKind::conv3x3 && spec.kind != LayerKind::conv1x1) continue;
            const int k2 = spec.kind == LayerKind::conv3x3 ? 9 : 1;
            const double bound = std::sqrt(6.0 / (static_cast<double>(spec.in_channels) * k2));
            for (auto& v : net_.params[id].w) {
                const double u01 = static_cast<double>(net_.rng() >> 11) * kInv53;
                v = static_cast<T>(bound * (2.0 * u01 - 1.0));
            }
        }
    }

    NetworkGraph<T> net_;
};

} // namespace nndetail

/// Encoder/decoder UNet: in-conv to base_channels, `scale` down stages
/// (double conv then maxpool), a bottom double conv, a mirrored up path
/// with bilinear upsampling and skip concatenation, and a 1x1 conv +
/// sigmoid head emitting out_channels mask planes.
///
/// Stage widths double from base_channels up to width_cap; the default cap
/// is calibrated so scale 5 at base 64 lands on the usual 13.3 M
/// parameters (scale 6 pairs with a cap of 672 for the 53 M variant).
template <typename T>
NetworkGraph<T> build_unet(int scale, int base_channels, int in_channels, int out_channels,
                           double dropout_rate = 0.0, int width_cap = 336,
                           std::uint64_t seed = 0x5eed) {
    if (scale < 2) throw bounds_error("build_unet: scale must be at least 2");
    if (base_channels < 1 || in_channels < 1 || out_channels < 1)
        throw bounds_error("build_unet: channel counts must be positive");

    nndetail::NetBuilder<T> b(in_channels);
    auto width = [&](int i) { // i = 0..scale
        const long long doubled = static_cast<long long>(base_channels) << std::max(0, i - 1);
        return static_cast<int>(std::min<long long>(doubled, width_cap));
    };

    int cur = b.conv_bn_relu(0, base_channels);
    std::vector<int> skips(static_cast<std::size_t>(scale) + 1, -1);
    for (int i = 1; i <= scale; ++i) {
        cur = b.double_conv(cur, width(i), width(i), dropout_rate);
        skips[static_cast<std::size_t>(i)] = cur;
        cur = b.add(LayerKind::maxpool2, cur);
    }
    cur = b.double_conv(cur, width(scale), width(scale), dropout_rate);
    for (int i = scale; i >= 1; --i) {
        cur = b.add(LayerKind::upsample2_linear, cur);
        cur = b.add(LayerKind::concat, cur, 0, skips[static_cast<std::size_t>(i)]);
        cur = b.double_conv(cur, width(i - 1), width(i - 1), dropout_rate);
    }
    cur = b.add(LayerKind::conv1x1, cur, out_channels);
    cur = b.add(LayerKind::sigmoid, cur);

    const std::string meta = "unet|scale=" + std::to_string(scale) + "|base=" +
                             std::to_string(base_channels) + "|cap=" + std::to_string(width_cap) +
                             "|in=" + std::to_string(in_channels) + "|out=" +
                             std::to_string(out_channels);
    return b.finish(cur, 1 << scale, meta, seed);
}

/// Dense-block encoder/decoder at scale 5: a 1x1 channel embedding, one
/// dense block per scale on the way down, a bottom block, skip-concatenated
/// dense blocks on the way up, and a 1x1 bottleneck head. The default
/// growth/layer schedule lands on ~0.28 M parameters.
template <typename T>
NetworkGraph<T> build_mdensenet(int in_channels, int out_channels, int scale = 5, int growth = 10,
                                int block_layers = 4, int embed_channels = 8,
                                double dropout_rate = 0.0, std::uint64_t seed = 0x5eed) {
    if (scale < 2) throw bounds_error("build_mdensenet: scale must be at least 2");
    if (growth < 1 || block_layers < 1 || embed_channels < 1)
        throw bounds_error("build_mdensenet: bad dense configuration");

    nndetail::NetBuilder<T> b(in_channels);
    int cur = b.add(LayerKind::conv1x1, 0, embed_channels);
    cur = b.add(LayerKind::batchnorm, cur);
    cur = b.add(LayerKind::relu, cur);

    std::vector<int> skips(static_cast<std::size_t>(scale), -1);
    for (int i = 0; i < scale; ++i) {
        cur = b.dense_block(cur, growth, block_layers, dropout_rate);
        skips[static_cast<std::size_t>(i)] = cur;
        cur = b.add(LayerKind::maxpool2, cur);
    }
    cur = b.dense_block(cur, growth, block_layers, dropout_rate);
    for (int i = scale - 1; i >= 0; --i) {
        cur = b.add(LayerKind::upsample2_linear, cur);
        cur = b.add(LayerKind::concat, cur, 0, skips[static_cast<std::size_t>(i)]);
        cur = b.dense_block(cur, growth, block_layers, dropout_rate);
    }
    cur = b.add(LayerKind::conv1x1, cur, embed_channels);
    cur = b.add(LayerKind::batchnorm, cur);
    cur = b.add(LayerKind::relu, cur);
    cur = b.add(LayerKind::conv1x1, cur, out_channels);
    cur = b.add(LayerKind::sigmoid, cur);

    const std::string meta = "mdensenet|scale=" + std::to_string(scale) + "|g=" +
                             std::to_string(growth) + "|n=" + std::to_string(block_layers) +
                             "|embed=" + std::to_string(embed_channels) + "|in=" +
                             std::to_string(in_channels) + "|out=" + std::to_string(out_channels);
    return b.finish(cur, 1 << scale, meta, seed);
}

/// Sets every trainable parameter (and BN running stats) to the state that
/// makes the graph an all-0.5 mask: zero weights, identity BN.
template <typename T>
void zero_params(NetworkGraph<T>& net) {
    for (auto& p : net.params) {
        std::fill(p.w.begin(), p.w.end(), T(0));
        std::fill(p.b.begin(), p.b.end(), T(0));
        std::fill(p.gamma.begin(), p.gamma.end(), T(1));
        std::fill(p.beta.begin(), p.beta.end(), T(0));
        std::fill(p.run_mean.begin(), p.run_mean.end(), T(0));
        std::fill(p.run_var.begin(), p.run_var.end(), T(1));
    }
}

} // namespace cwsep
