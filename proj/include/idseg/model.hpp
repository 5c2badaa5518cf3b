#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "idseg/config.hpp"
#include "idseg/kernels.hpp"
#include "idseg/rng.hpp"
#include "idseg/tensor.hpp"

namespace idseg {

template <class T>
struct LayerParams {
    TensorT<T> weights;
    TensorT<T> bias;
    bool has_params() const { return !weights.data.empty(); }
};

template <class T>
struct ModelT {
    ModelConfig config;
    std::vector<LayerParams<T>> params;  // aligned with config.layers
    int64_t param_count = 0;
};

using Model = ModelT<float>;

/// Glorot-uniform initialization: weights uniform in +-sqrt(6/(fan_in+fan_out)),
/// biases zero. Deterministic given the seed.
template <class T = float>
ModelT<T> init_model(const ModelConfig& config, uint64_t seed) {
    const auto shapes = layer_output_shapes(config);
    ModelT<T> model;
    model.config = config;
    model.params.resize(config.layers.size());
    Rng rng(seed);
    for (size_t i = 1; i < config.layers.size(); ++i) {
        const LayerSpec& l = config.layers[i];
        const LayerShape& in = shapes[i - 1];
        LayerParams<T>& p = model.params[i];
        double fan_in = 0, fan_out = 0;
        switch (l.kind) {
            case LayerKind::conv:
            case LayerKind::output_conv: {
                const int k = l.kind == LayerKind::output_conv ? 1 : l.kernel;
                p.weights = TensorT<T>({k, k, in.c, l.channels});
                fan_in = static_cast<double>(k) * k * in.c;
                fan_out = static_cast<double>(k) * k * l.channels;
                break;
            }
            case LayerKind::tconv:
                p.weights = TensorT<T>({3, 3, in.c, l.channels});
                fan_in = 9.0 * in.c;
                fan_out = 9.0 * l.channels;
                break;
            case LayerKind::dense:
                p.weights = TensorT<T>({in.c, l.channels});
                fan_in = in.c;
                fan_out = l.channels;
                break;
            default:
                continue;
        }
        p.bias = TensorT<T>({l.channels});
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (T& w : p.weights.data) w = static_cast<T>(rng.uniform(-limit, limit));
        model.param_count += p.weights.size() + p.bias.size();
    }
    return model;
}

/// Every layer's post-activation output, input batch included at index 0.
template <class T>
struct ForwardCache {
    std::vector<TensorT<T>> acts;
};

/// Runs the wiring graph. With keep_cache the per-layer activations needed by
/// backward are retained; otherwise only the probability map survives.
template <class T>
TensorT<T> forward(const ModelT<T>& model, const TensorT<T>& batch,
                   ForwardCache<T>* cache = nullptr) {
    const auto& layers = model.config.layers;
    if (batch.rank() != 4 || batch.shape[1] != model.config.input_height() ||
        batch.shape[2] != model.config.input_width() ||
        batch.shape[3] != model.config.input_channels())
        throw ShapeError("forward: batch " + shape_str(batch.shape) + " does not match input " +
                         std::to_string(model.config.input_height()) + "x" +
                         std::to_string(model.config.input_width()) + "x" +
                         std::to_string(model.config.input_channels()));

    std::vector<TensorT<T>> acts;
    acts.reserve(layers.size());
    acts.push_back(batch);
    for (size_t i = 1; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        const TensorT<T>& prev = acts.back();
        const LayerParams<T>& p = model.params[i];
        switch (l.kind) {
            case LayerKind::conv:
                acts.push_back(relu(conv2d_forward(prev, p.weights, p.bias, l.stride)));
                break;
            case LayerKind::tconv:
                acts.push_back(relu(tconv2d_forward(prev, p.weights, p.bias)));
                break;
            case LayerKind::dense:
                acts.push_back(relu(dense_forward(prev, p.weights, p.bias)));
                break;
            case LayerKind::flatten:
                acts.push_back(flatten(prev));
                break;
            case LayerKind::broadcast:
                acts.push_back(broadcast_spatial(prev, l.height, l.width));
                break;
            case LayerKind::concat:
                acts.push_back(concat_channels(prev, acts[static_cast<size_t>(l.with_layer)]));
                break;
            case LayerKind::output_conv:
                acts.push_back(sigmoid(conv2d_forward(prev, p.weights, p.bias, 1)));
                break;
            case LayerKind::input:
                throw ConfigError("forward: unexpected input layer");
        }
    }

    TensorT<T> prob = acts.back();
    if (cache) cache->acts = std::move(acts);
    return prob;
}

/// Per-layer parameter gradients, aligned with config.layers.
template <class T>
struct ModelGrads {
    std::vector<LayerParams<T>> layers;
};

/// Reverse traversal over the wiring graph. Skip-connected encoder outputs
/// accumulate gradient from both of their consumers.
template <class T>
ModelGrads<T> backward(const ModelT<T>& model, const ForwardCache<T>& cache,
                       const TensorT<T>& d_prob) {
    const auto& layers = model.config.layers;
    if (cache.acts.size() != layers.size())
        throw std::invalid_argument("backward: stale or missing forward cache");
    if (!same_shape(cache.acts.back(), d_prob))
        throw ShapeError("backward: d_prob shape " + shape_str(d_prob.shape) +
                         " does not match cached output");

    ModelGrads<T> grads;
    grads.layers.resize(layers.size());
    std::vector<TensorT<T>> d_at(layers.size());
    d_at.back() = d_prob;
    for (size_t i = layers.size() - 1; i >= 1; --i) {
        const LayerSpec& l = layers[i];
        if (d_at[i].data.empty()) d_at[i] = TensorT<T>(cache.acts[i].shape);  // dead branch
        const TensorT<T>& d_out = d_at[i];
        const TensorT<T>& in = cache.acts[i - 1];
        const LayerParams<T>& p = model.params[i];
        switch (l.kind) {
            case LayerKind::conv: {
                const TensorT<T> d_pre = relu_grad(cache.acts[i], d_out);
                KernelGradsT<T> kg = conv2d_backward(in, p.weights, l.stride, d_pre);
                grads.layers[i] = {std::move(kg.d_weights), std::move(kg.d_bias)};
                add_into(d_at[i - 1], kg.d_input);
                break;
            }
            case LayerKind::tconv: {
                const TensorT<T> d_pre = relu_grad(cache.acts[i], d_out);
                KernelGradsT<T> kg = tconv2d_backward(in, p.weights, d_pre);
                grads.layers[i] = {std::move(kg.d_weights), std::move(kg.d_bias)};
                add_into(d_at[i - 1], kg.d_input);
                break;
            }
            case LayerKind::dense: {
                const TensorT<T> d_pre = relu_grad(cache.acts[i], d_out);
                KernelGradsT<T> kg = dense_backward(in, p.weights, d_pre);
                grads.layers[i] = {std::move(kg.d_weights), std::move(kg.d_bias)};
                add_into(d_at[i - 1], kg.d_input);
                break;
            }
            case LayerKind::output_conv: {
                const TensorT<T> d_pre = sigmoid_grad(cache.acts[i], d_out);
                KernelGradsT<T> kg = conv2d_backward(in, p.weights, 1, d_pre);
                grads.layers[i] = {std::move(kg.d_weights), std::move(kg.d_bias)};
                add_into(d_at[i - 1], kg.d_input);
                break;
            }
            case LayerKind::flatten:
                add_into(d_at[i - 1], unflatten(d_out, in.shape[1], in.shape[2], in.shape[3]));
                break;
            case LayerKind::broadcast:
                add_into(d_at[i - 1], broadcast_spatial_grad(d_out));
                break;
            case LayerKind::concat: {
                auto [da, db] = concat_split_grad(d_out, in.shape[3],
                                                  d_out.shape[3] - in.shape[3]);
                add_into(d_at[i - 1], da);
                add_into(d_at[static_cast<size_t>(l.with_layer)], db);
                break;
            }
            case LayerKind::input:
                break;
        }
    }
    return grads;
}

}  // namespace idseg
