#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cwsep/nn.hpp"

namespace cwsep {

struct LayerCost {
    int node = 0;
    std::string kind;
    long long params = 0;
    double flops = 0.0;
};

struct CostReport {
    long long param_count = 0;
    double flops = 0.0;
    std::vector<LayerCost> per_layer;
};

/// Weights + biases + BN affine terms, per layer and total.
template <typename T>
CostReport count_params(const NetworkGraph<T>& net) {
    CostReport report;
    for (std::size_t id = 0; id < net.layers.size(); ++id) {
        const auto& p = net.params[id];
        const long long n = static_cast<long long>(p.w.size() + p.b.size() + p.gamma.size() + p.beta.size());
        if (n == 0) continue;
        report.per_layer.push_back({static_cast<int>(id), layer_kind_name(net.layers[id].kind), n, 0.0});
        report.param_count += n;
    }
    return report;
}

/// Forward-pass cost for one input of the given shape, after padding to
/// the graph's pool-friendly multiple. Convolutions count 2*k^2*Cin*Cout
/// per output element; pool/upsample/activation count one op per output
/// element and batchnorm two; dropout and concat are free.
template <typename T>
CostReport count_flops(const NetworkGraph<T>& net, int n, int in_h, int in_w) {
    CostReport report = count_params(net);
    report.per_layer.clear();
    report.param_count = 0;

    struct Shape {
        int h = 0, w = 0;
    };
    std::vector<Shape> shapes(net.layers.size());
    shapes[0] = {nndetail::pad_up(in_h, net.pad_multiple), nndetail::pad_up(in_w, net.pad_multiple)};

    for (std::size_t id = 1; id < net.layers.size(); ++id) {
        const LayerSpec& spec = net.layers[id];
        const Shape in = shapes[static_cast<std::size_t>(spec.input)];
        Shape out = in;
        double flops = 0.0;
        const double batch = static_cast<double>(n);
        switch (spec.kind) {
        case LayerKind::conv3x3:
            flops = batch * 2.0 * 9.0 * spec.in_channels * spec.out_channels * in.h * in.w;
            break;
        case LayerKind::conv1x1:
            flops = batch * 2.0 * spec.in_channels * spec.out_channels * in.h * in.w;
            break;
        case LayerKind::batchnorm:
            flops = batch * 2.0 * spec.out_channels * in.h * in.w;
            break;
        case LayerKind::relu:
        case LayerKind::sigmoid:
            flops = batch * spec.out_channels * in.h * in.w;
            break;
        case LayerKind::maxpool2:
            out = {in.h / 2, in.w / 2};
            flops = batch * spec.out_channels * out.h * out.w;
            break;
        case LayerKind::upsample2_linear:
            out = {in.h * 2, in.w * 2};
            flops = batch * spec.out_channels * out.h * out.w;
            break;
        case LayerKind::dropout:
        case LayerKind::concat:
            flops = 0.0;
            break;
        case LayerKind::input:
            break;
        }
        shapes[id] = out;

        const auto& p = net.params[id];
        const long long pcount =
            static_cast<long long>(p.w.size() + p.b.size() + p.gamma.size() + p.beta.size());
        report.param_count += pcount;
        if (pcount != 0 || flops != 0.0)
            report.per_layer.push_back(
                {static_cast<int>(id), layer_kind_name(spec.kind), pcount, flops});
        report.flops += flops;
    }
    return report;
}

} // namespace cwsep
