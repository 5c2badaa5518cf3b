#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "idseg/tensor.hpp"

namespace idseg {

template <class T>
struct BceResult {
    double loss = 0.0;
    TensorT<T> d_prob;
};

/// Binary cross-entropy, mean over all elements, with the probability clamped
/// to [1e-7, 1 - 1e-7] before the logs. d_prob is the exact gradient of the
/// clamped mean (zero where the clamp is active).
template <class T>
BceResult<T> bce_loss(const TensorT<T>& prob, const TensorT<T>& target) {
    if (!same_shape(prob, target))
        throw ShapeError("bce_loss: prob " + shape_str(prob.shape) + " vs target " +
                         shape_str(target.shape));
    constexpr double kLo = 1e-7;
    constexpr double kHi = 1.0 - 1e-7;
    const double n = static_cast<double>(prob.data.size());

    BceResult<T> r;
    r.d_prob = TensorT<T>(prob.shape);
    double sum = 0.0;
    for (size_t i = 0; i < prob.data.size(); ++i) {
        const double p = static_cast<double>(prob.data[i]);
        const double y = static_cast<double>(target.data[i]);
        const double pc = std::clamp(p, kLo, kHi);
        sum += y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc);
        const bool clamped = p < kLo || p > kHi;
        r.d_prob.data[i] = clamped ? T{0} : static_cast<T>((pc - y) / (pc * (1.0 - pc)) / n);
    }
    r.loss = -sum / n;
    ensure_finite(r.d_prob, "bce_loss");
    return r;
}

struct ConfusionCounts {
    int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    int64_t total() const { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
};

struct PixelMetrics {
    double accuracy = 0.0, precision = 0.0, recall = 0.0;
};

/// Binarizes prob at the threshold (p >= tau is positive) and counts the
/// confusion matrix against the {0,1} target.
template <class T>
ConfusionCounts confusion_counts(const TensorT<T>& prob, const TensorT<T>& target,
                                 double threshold = 0.5) {
    if (!same_shape(prob, target))
        throw ShapeError("confusion_counts: prob " + shape_str(prob.shape) + " vs target " +
                         shape_str(target.shape));
    ConfusionCounts c;
    for (size_t i = 0; i < prob.data.size(); ++i) {
        const bool pred = static_cast<double>(prob.data[i]) >= threshold;
        const bool truth = static_cast<double>(target.data[i]) >= 0.5;
        if (pred && truth) ++c.tp;
        else if (pred && !truth) ++c.fp;
        else if (!pred && truth) ++c.fn;
        else ++c.tn;
    }
    return c;
}

/// An empty denominator with no positives to find/predict counts as 1.0.
inline PixelMetrics metrics_from_counts(const ConfusionCounts& c) {
    PixelMetrics m;
    const int64_t total = c.total();
    m.accuracy = total > 0 ? static_cast<double>(c.tp + c.tn) / static_cast<double>(total) : 1.0;
    m.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 1.0;
    m.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 1.0;
    return m;
}

template <class T>
PixelMetrics pixel_metrics(const TensorT<T>& prob, const TensorT<T>& target,
                           double threshold = 0.5) {
    return metrics_from_counts(confusion_counts(prob, target, threshold));
}

}  // namespace idseg
