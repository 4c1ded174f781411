// Copyright Contributors to the TriField Project
// SPDX-License-Identifier: Apache-2.0
//
// Adam, the image loss, and the density smoothness regularizer. The training
// loop itself lives in train.hpp.

#pragma once

#include "trifield/model.hpp"

namespace trifield {

struct AdamParams {
    double lr_features = 1e-2;  // explicit plane/voxel features
    double lr_decoder = 1e-3;   // MLP weights
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First/second moment arrays mirroring the model's parameter blocks.
template <typename T>
struct AdamStateT {
    std::vector<std::vector<double>> m, v;
    std::int64_t step = 0;
    AdamParams hyper;
};

using AdamState = AdamStateT<float>;

template <typename T>
AdamStateT<T> make_adam_state(FieldModelT<T>& model, const AdamParams& hyper) {
    AdamStateT<T> st;
    st.hyper = hyper;
    GradientTapeT<T> tape = make_tape(model);
    for (const auto& block : parameter_blocks(model, tape)) {
        st.m.emplace_back(block.values.size(), 0.0);
        st.v.emplace_back(block.values.size(), 0.0);
    }
    return st;
}

// Standard bias-corrected Adam update over every parameter block.
template <typename T>
void adam_step(FieldModelT<T>& model, GradientTapeT<T>& tape, AdamStateT<T>& state) {
    auto blocks = parameter_blocks(model, tape);
    if (blocks.size() != state.m.size())
        throw contract_error("adam_step: state does not mirror parameters");
    state.step += 1;
    const double b1 = state.hyper.beta1, b2 = state.hyper.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        auto& block = blocks[bi];
        if (state.m[bi].size() != block.values.size())
            throw contract_error("adam_step: moment shape mismatch");
        const double lr = block.is_feature ? state.hyper.lr_features : state.hyper.lr_decoder;
        double* m = state.m[bi].data();
        double* v = state.v[bi].data();
        for (std::size_t i = 0; i < block.values.size(); ++i) {
            const double g = static_cast<double>(block.grads[i]);
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            block.values[i] -= static_cast<T>(lr * m_hat / (std::sqrt(v_hat) + state.hyper.eps));
        }
    }
}

// Mean squared error over all scalar components; returns the loss and the
// upstream gradient d(loss)/d(pred) = 2 (pred - target) / n.
template <typename T>
std::pair<double, std::vector<double>> mse_loss(std::span<const T> pred,
                                                std::span<const T> target) {
    if (pred.size() != target.size() || pred.empty())
        throw contract_error("mse_loss: size mismatch or empty");
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    double loss = 0.0;
    std::vector<double> grad(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
        loss += d * d;
        grad[i] = 2.0 * d * inv_n;
    }
    return {loss * inv_n, std::move(grad)};
}

// L1 smoothness penalty on the density field: mean |sigma(x) - sigma(x + dx)|
// over n_pairs points drawn uniformly in the cube, dx ~ N(0, perturb_sigma^2)
// per axis. Gradients accumulate into the tape scaled by `weight`.
template <typename T>
double density_regularization(const FieldModelT<T>& model, int n_pairs, double perturb_sigma,
                              CounterRng& rng, GradientTapeT<T>& tape, double weight = 1.0) {
    if (n_pairs < 1) throw input_error("density_regularization: n_pairs must be >= 1");
    const double half = model.side * 0.5;
    const int k = model.decoder.feature_channels;
    const std::vector<T> zero_feat_grad(k, T(0));
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n_pairs);
    SampleCacheT<T> cache_a, cache_b;
    for (int i = 0; i < n_pairs; ++i) {
        const Vec3 x{rng.uniform(-half, half), rng.uniform(-half, half),
                     rng.uniform(-half, half)};
        const Vec3 dx{perturb_sigma * rng.normal(), perturb_sigma * rng.normal(),
                      perturb_sigma * rng.normal()};
        const Vec3 xp = x + dx;
        const T sa = query_field(model, x, &cache_a).first;
        const T sb = query_field(model, xp, &cache_b).first;
        const double diff = static_cast<double>(sa) - static_cast<double>(sb);
        loss += std::abs(diff) * inv_n;
        if (weight != 0.0) {
            const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
            const T ga = static_cast<T>(weight * s * inv_n);
            query_field_backward(model, cache_a, ga, std::span<const T>(zero_feat_grad), tape);
            query_field_backward(model, cache_b, static_cast<T>(-ga),
                                 std::span<const T>(zero_feat_grad), tape);
        }
    }
    return loss;
}

}  // namespace trifield
