#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cwsep/errors.hpp"
#include "cwsep/nn.hpp"

namespace cwsep {

/// Bias-corrected Adam moments, one pair of tensors per parameter array in
/// declaration order.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;
    std::vector<std::vector<double>> m, v;
};

/// One standard Adam update over every parameter of the graph. Non-finite
/// gradients abort with the offending parameter array named.
template <typename T>
void adam_step(NetworkGraph<T>& net, AdamState& state, double lr) {
    std::size_t arrays = 0;
    for_each_param(net, [&](const std::string&, std::vector<T>&, std::vector<T>&) { ++arrays; });
    if (state.m.empty()) {
        state.m.resize(arrays);
        state.v.resize(arrays);
        std::size_t idx = 0;
        for_each_param(net, [&](const std::string&, std::vector<T>& p, std::vector<T>&) {
            state.m[idx].assign(p.size(), 0.0);
            state.v[idx].assign(p.size(), 0.0);
            ++idx;
        });
    } else if (state.m.size() != arrays) {
        throw state_error("adam_step: optimizer state does not match the graph");
    }

    ++state.step;
    const double corr1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double corr2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    std::size_t idx = 0;
    for_each_param(net, [&](const std::string& name, std::vector<T>& p, std::vector<T>& g) {
        auto& m = state.m[idx];
        auto& v = state.v[idx];
        ++idx;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double grad = static_cast<double>(g[i]);
            if (!std::isfinite(grad))
                throw numeric_error("adam_step: non-finite gradient in " + name);
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * grad;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * grad * grad;
            const double mhat = m[i] / corr1;
            const double vhat = v[i] / corr2;
            p[i] = static_cast<T>(static_cast<double>(p[i]) -
                                  lr * mhat / (std::sqrt(vhat) + state.epsilon));
        }
    });
}

} // namespace cwsep
