#pragma once

#include <cmath>
#include <cstdint>

#include "idseg/model.hpp"

namespace idseg {

/// Adam with bias correction. Defaults match the usual framework constants:
/// lr 0.001, beta1 0.9, beta2 0.999, epsilon 1e-7.
template <class T>
struct AdamStateT {
    int64_t step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
    std::vector<LayerParams<T>> m;  // first moments, aligned with model params
    std::vector<LayerParams<T>> v;  // second moments
};

using AdamState = AdamStateT<float>;

template <class T>
AdamStateT<T> init_adam(const ModelT<T>& model, double lr = 1e-3) {
    AdamStateT<T> s;
    s.lr = lr;
    s.m.resize(model.params.size());
    s.v.resize(model.params.size());
    for (size_t i = 0; i < model.params.size(); ++i) {
        if (!model.params[i].has_params()) continue;
        s.m[i].weights = TensorT<T>(model.params[i].weights.shape);
        s.m[i].bias = TensorT<T>(model.params[i].bias.shape);
        s.v[i].weights = TensorT<T>(model.params[i].weights.shape);
        s.v[i].bias = TensorT<T>(model.params[i].bias.shape);
    }
    return s;
}

namespace detail {

template <class T>
void adam_update(TensorT<T>& theta, TensorT<T>& m, TensorT<T>& v, const TensorT<T>& g,
                 const AdamStateT<T>& s, double bc1, double bc2) {
    if (!same_shape(theta, g))
        throw ShapeError("adam_step: gradient shape " + shape_str(g.shape) +
                         " does not match parameter " + shape_str(theta.shape));
    for (size_t i = 0; i < theta.data.size(); ++i) {
        const double gi = static_cast<double>(g.data[i]);
        const double mi = s.beta1 * static_cast<double>(m.data[i]) + (1.0 - s.beta1) * gi;
        const double vi = s.beta2 * static_cast<double>(v.data[i]) + (1.0 - s.beta2) * gi * gi;
        m.data[i] = static_cast<T>(mi);
        v.data[i] = static_cast<T>(vi);
        const double mhat = mi / bc1;
        const double vhat = vi / bc2;
        theta.data[i] = static_cast<T>(static_cast<double>(theta.data[i]) -
                                       s.lr * mhat / (std::sqrt(vhat) + s.epsilon));
    }
}

}  // namespace detail

template <class T>
void adam_step(ModelT<T>& model, AdamStateT<T>& state, const ModelGrads<T>& grads) {
    if (grads.layers.size() != model.params.size())
        throw ShapeError("adam_step: gradient layout does not match model");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < model.params.size(); ++i) {
        if (!model.params[i].has_params()) continue;
        detail::adam_update(model.params[i].weights, state.m[i].weights, state.v[i].weights,
                            grads.layers[i].weights, state, bc1, bc2);
        detail::adam_update(model.params[i].bias, state.m[i].bias, state.v[i].bias,
                            grads.layers[i].bias, state, bc1, bc2);
    }
}

}  // namespace idseg
