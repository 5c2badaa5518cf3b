#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace idseg {

// Rank/dimension violations are reported as ShapeError.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// NaN/Inf escaping a numeric kernel is reported as NumericError.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense row-major tensor of rank 1, 2 or 4.
/// Rank-4 layout is batch x height x width x channels, channels innermost.
template <class T>
struct TensorT {
    std::vector<int> shape;
    std::vector<T> data;

    TensorT() = default;
    explicit TensorT(std::vector<int> s)
        : shape(std::move(s)), data(static_cast<size_t>(checked_size(shape)), T{}) {}

    static TensorT zeros(std::vector<int> s) { return TensorT(std::move(s)); }

    static TensorT full(std::vector<int> s, T value) {
        TensorT t(std::move(s));
        for (T& v : t.data) v = value;
        return t;
    }

    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int64_t size() const { return static_cast<int64_t>(data.size()); }

    T& at(int n, int h, int w, int c) { return data[static_cast<size_t>(index4(n, h, w, c))]; }
    T at(int n, int h, int w, int c) const { return data[static_cast<size_t>(index4(n, h, w, c))]; }
    T& at(int r, int c) { return data[static_cast<size_t>(r) * shape[1] + c]; }
    T at(int r, int c) const { return data[static_cast<size_t>(r) * shape[1] + c]; }
    T& at(int i) { return data[static_cast<size_t>(i)]; }
    T at(int i) const { return data[static_cast<size_t>(i)]; }

    int64_t index4(int n, int h, int w, int c) const {
        return ((static_cast<int64_t>(n) * shape[1] + h) * shape[2] + w) * shape[3] + c;
    }

    static int64_t checked_size(const std::vector<int>& s) {
        if (s.size() != 1 && s.size() != 2 && s.size() != 4)
            throw ShapeError("tensor rank must be 1, 2 or 4, got " + std::to_string(s.size()));
        int64_t n = 1;
        for (int d : s) {
            if (d <= 0) throw ShapeError("tensor dimensions must be positive");
            n *= d;
        }
        return n;
    }
};

using Tensor = TensorT<float>;

/// Gradients of one kernel application with respect to its inputs.
template <class T>
struct KernelGradsT {
    TensorT<T> d_input;
    TensorT<T> d_weights;
    TensorT<T> d_bias;
};

using KernelGrads = KernelGradsT<float>;

template <class T>
bool same_shape(const TensorT<T>& a, const TensorT<T>& b) {
    return a.shape == b.shape;
}

inline std::string shape_str(const std::vector<int>& s) {
    std::string out = "(";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

template <class T>
void ensure_finite(const TensorT<T>& t, const char* who) {
    for (T v : t.data)
        if (!std::isfinite(static_cast<double>(v)))
            throw NumericError(std::string(who) + " produced a non-finite value");
}

template <class T>
void add_into(TensorT<T>& acc, const TensorT<T>& g) {
    if (acc.data.empty()) {
        acc = g;
        return;
    }
    if (!same_shape(acc, g))
        throw ShapeError("gradient accumulation shape mismatch: " + shape_str(acc.shape) +
                         " vs " + shape_str(g.shape));
    for (size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += g.data[i];
}

}  // namespace idseg
