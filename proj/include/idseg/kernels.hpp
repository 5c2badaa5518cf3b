#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "idseg/tensor.hpp"

// Forward and backward kernels the network layers are assembled from.
// All kernels are pure functions of their arguments; partial sums are
// accumulated in 64-bit and stored back at the tensor's precision.

namespace idseg {

namespace detail {

template <class T>
void conv_check(const TensorT<T>& input, const TensorT<T>& weights, int stride) {
    if (input.rank() != 4) throw ShapeError("conv2d: input must be rank 4, got " + shape_str(input.shape));
    if (weights.rank() != 4) throw ShapeError("conv2d: weights must be rank 4, got " + shape_str(weights.shape));
    const int kh = weights.shape[0], kw = weights.shape[1];
    if (kh != kw || (kh != 1 && kh != 3))
        throw ShapeError("conv2d: kernel must be 1x1 or 3x3, got " + shape_str(weights.shape));
    if (stride != 1 && stride != 2) throw ShapeError("conv2d: stride must be 1 or 2");
    if (weights.shape[2] != input.shape[3])
        throw ShapeError("conv2d: input channels " + std::to_string(input.shape[3]) +
                         " do not match weights " + shape_str(weights.shape));
}

}  // namespace detail

/// "Same"-padded strided convolution, NHWC.
/// out[n,or,oc,f] = bias[f] + sum_{kr,kc,c} in[n, s*or+kr-pad, s*oc+kc-pad, c] * w[kr,kc,c,f]
/// with pad = (kh-1)/2; out-of-range reads contribute zero.
template <class T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const TensorT<T>& weights,
                          const TensorT<T>& bias, int stride) {
    detail::conv_check(input, weights, stride);
    const int n = input.shape[0], h = input.shape[1], w = input.shape[2], cin = input.shape[3];
    const int kh = weights.shape[0], kw = weights.shape[1], cout = weights.shape[3];
    if (bias.rank() != 1 || bias.shape[0] != cout)
        throw ShapeError("conv2d: bias must be rank 1 of size " + std::to_string(cout));
    const int pad = (kh - 1) / 2;
    const int oh = (h + stride - 1) / stride;
    const int ow = (w + stride - 1) / stride;

    TensorT<T> out({n, oh, ow, cout});
    std::vector<double> acc(static_cast<size_t>(cout));
    const T* in_p = input.data.data();
    const T* w_p = weights.data.data();
    T* out_p = out.data.data();
    for (int b = 0; b < n; ++b) {
        for (int orow = 0; orow < oh; ++orow) {
            for (int ocol = 0; ocol < ow; ++ocol) {
                for (int f = 0; f < cout; ++f) acc[static_cast<size_t>(f)] = static_cast<double>(bias.data[static_cast<size_t>(f)]);
                for (int kr = 0; kr < kh; ++kr) {
                    const int ir = stride * orow + kr - pad;
                    if (ir < 0 || ir >= h) continue;
                    for (int kc = 0; kc < kw; ++kc) {
                        const int ic = stride * ocol + kc - pad;
                        if (ic < 0 || ic >= w) continue;
                        const T* in_row = in_p + (((static_cast<int64_t>(b) * h + ir) * w) + ic) * cin;
                        const T* w_base = w_p + (static_cast<int64_t>(kr) * kw + kc) * cin * cout;
                        for (int c = 0; c < cin; ++c) {
                            const double v = static_cast<double>(in_row[c]);
                            const T* wr = w_base + static_cast<int64_t>(c) * cout;
                            for (int f = 0; f < cout; ++f)
                                acc[static_cast<size_t>(f)] += v * static_cast<double>(wr[f]);
                        }
                    }
                }
                T* orow_p = out_p + (((static_cast<int64_t>(b) * oh + orow) * ow) + ocol) * cout;
                for (int f = 0; f < cout; ++f) orow_p[f] = static_cast<T>(acc[static_cast<size_t>(f)]);
            }
        }
    }
    ensure_finite(out, "conv2d_forward");
    return out;
}

/// Exact analytic gradients of conv2d_forward for input, weights and bias.
template <class T>
KernelGradsT<T> conv2d_backward(const TensorT<T>& input, const TensorT<T>& weights,
                                int stride, const TensorT<T>& d_output) {
    detail::conv_check(input, weights, stride);
    const int n = input.shape[0], h = input.shape[1], w = input.shape[2], cin = input.shape[3];
    const int kh = weights.shape[0], kw = weights.shape[1], cout = weights.shape[3];
    const int pad = (kh - 1) / 2;
    const int oh = (h + stride - 1) / stride;
    const int ow = (w + stride - 1) / stride;
    if (d_output.shape != std::vector<int>{n, oh, ow, cout})
        throw ShapeError("conv2d_backward: d_output shape " + shape_str(d_output.shape) +
                         " does not match forward output");

    std::vector<double> d_in(input.data.size(), 0.0);
    std::vector<double> d_w(weights.data.size(), 0.0);
    std::vector<double> d_b(static_cast<size_t>(cout), 0.0);
    const T* in_p = input.data.data();
    const T* w_p = weights.data.data();
    const T* go_p = d_output.data.data();
    for (int b = 0; b < n; ++b) {
        for (int orow = 0; orow < oh; ++orow) {
            for (int ocol = 0; ocol < ow; ++ocol) {
                const T* go = go_p + (((static_cast<int64_t>(b) * oh + orow) * ow) + ocol) * cout;
                for (int f = 0; f < cout; ++f) d_b[static_cast<size_t>(f)] += static_cast<double>(go[f]);
                for (int kr = 0; kr < kh; ++kr) {
                    const int ir = stride * orow + kr - pad;
                    if (ir < 0 || ir >= h) continue;
                    for (int kc = 0; kc < kw; ++kc) {
                        const int ic = stride * ocol + kc - pad;
                        if (ic < 0 || ic >= w) continue;
                        const int64_t in_off = (((static_cast<int64_t>(b) * h + ir) * w) + ic) * cin;
                        const T* in_row = in_p + in_off;
                        double* din_row = d_in.data() + in_off;
                        const int64_t w_off = (static_cast<int64_t>(kr) * kw + kc) * cin * cout;
                        for (int c = 0; c < cin; ++c) {
                            const double v = static_cast<double>(in_row[c]);
                            const T* wr = w_p + w_off + static_cast<int64_t>(c) * cout;
                            double* dwr = d_w.data() + w_off + static_cast<int64_t>(c) * cout;
                            double s = 0.0;
                            for (int f = 0; f < cout; ++f) {
                                const double g = static_cast<double>(go[f]);
                                dwr[f] += v * g;
                                s += static_cast<double>(wr[f]) * g;
                            }
                            din_row[c] += s;
                        }
                    }
                }
            }
        }
    }

    KernelGradsT<T> grads;
    grads.d_input = TensorT<T>(input.shape);
    grads.d_weights = TensorT<T>(weights.shape);
    grads.d_bias = TensorT<T>({cout});
    for (size_t i = 0; i < d_in.size(); ++i) grads.d_input.data[i] = static_cast<T>(d_in[i]);
    for (size_t i = 0; i < d_w.size(); ++i) grads.d_weights.data[i] = static_cast<T>(d_w[i]);
    for (size_t i = 0; i < d_b.size(); ++i) grads.d_bias.data[i] = static_cast<T>(d_b[i]);
    ensure_finite(grads.d_input, "conv2d_backward");
    ensure_finite(grads.d_weights, "conv2d_backward");
    ensure_finite(grads.d_bias, "conv2d_backward");
    return grads;
}

namespace detail {

template <class T>
void tconv_check(const TensorT<T>& input, const TensorT<T>& weights, const int* bias_len) {
    if (input.rank() != 4) throw ShapeError("tconv2d: input must be rank 4, got " + shape_str(input.shape));
    if (weights.rank() != 4 || weights.shape[0] != 3 || weights.shape[1] != 3)
        throw ShapeError("tconv2d: weights must be 3x3xCinxCout, got " + shape_str(weights.shape));
    if (weights.shape[2] != input.shape[3])
        throw ShapeError("tconv2d: input channels " + std::to_string(input.shape[3]) +
                         " do not match weights " + shape_str(weights.shape));
    if (bias_len && *bias_len != weights.shape[3])
        throw ShapeError("tconv2d: bias must be rank 1 of size " + std::to_string(weights.shape[3]));
}

}  // namespace detail

/// Stride-2 3x3 transposed convolution (spatial size doubles).
/// Input position i and kernel offset k in {0,1,2} contribute in[i]*w[k] to
/// output position 2i + k - 1; contributions falling outside the output are
/// dropped. Bias is added once per output element.
template <class T>
TensorT<T> tconv2d_forward(const TensorT<T>& input, const TensorT<T>& weights,
                           const TensorT<T>& bias) {
    const int blen = bias.rank() == 1 ? bias.shape[0] : -1;
    detail::tconv_check(input, weights, &blen);
    const int n = input.shape[0], h = input.shape[1], w = input.shape[2], cin = input.shape[3];
    const int cout = weights.shape[3];
    const int oh = 2 * h, ow = 2 * w;

    std::vector<double> acc(static_cast<size_t>(n) * oh * ow * cout, 0.0);
    const T* in_p = input.data.data();
    const T* w_p = weights.data.data();
    for (int b = 0; b < n; ++b) {
        for (int ir = 0; ir < h; ++ir) {
            for (int ic = 0; ic < w; ++ic) {
                const T* in_row = in_p + (((static_cast<int64_t>(b) * h + ir) * w) + ic) * cin;
                for (int kr = 0; kr < 3; ++kr) {
                    const int orow = 2 * ir + kr - 1;
                    if (orow < 0 || orow >= oh) continue;
                    for (int kc = 0; kc < 3; ++kc) {
                        const int ocol = 2 * ic + kc - 1;
                        if (ocol < 0 || ocol >= ow) continue;
                        double* arow = acc.data() + (((static_cast<int64_t>(b) * oh + orow) * ow) + ocol) * cout;
                        const T* w_base = w_p + (static_cast<int64_t>(kr) * 3 + kc) * cin * cout;
                        for (int c = 0; c < cin; ++c) {
                            const double v = static_cast<double>(in_row[c]);
                            const T* wr = w_base + static_cast<int64_t>(c) * cout;
                            for (int f = 0; f < cout; ++f) arow[f] += v * static_cast<double>(wr[f]);
                        }
                    }
                }
            }
        }
    }

    TensorT<T> out({n, oh, ow, cout});
    const int64_t pixels = static_cast<int64_t>(n) * oh * ow;
    for (int64_t p = 0; p < pixels; ++p)
        for (int f = 0; f < cout; ++f)
            out.data[static_cast<size_t>(p * cout + f)] =
                static_cast<T>(acc[static_cast<size_t>(p * cout + f)] + static_cast<double>(bias.data[static_cast<size_t>(f)]));
    ensure_finite(out, "tconv2d_forward");
    return out;
}

/// Mirror image of tconv2d_forward: d_input gathers what forward scattered.
template <class T>
KernelGradsT<T> tconv2d_backward(const TensorT<T>& input, const TensorT<T>& weights,
                                 const TensorT<T>& d_output) {
    detail::tconv_check(input, weights, static_cast<const int*>(nullptr));
    const int n = input.shape[0], h = input.shape[1], w = input.shape[2], cin = input.shape[3];
    const int cout = weights.shape[3];
    const int oh = 2 * h, ow = 2 * w;
    if (d_output.shape != std::vector<int>{n, oh, ow, cout})
        throw ShapeError("tconv2d_backward: d_output shape " + shape_str(d_output.shape) +
                         " does not match forward output");

    std::vector<double> d_in(input.data.size(), 0.0);
    std::vector<double> d_w(weights.data.size(), 0.0);
    std::vector<double> d_b(static_cast<size_t>(cout), 0.0);
    const T* in_p = input.data.data();
    const T* w_p = weights.data.data();
    const T* go_p = d_output.data.data();
    for (size_t i = 0; i < d_output.data.size(); ++i)
        d_b[i % static_cast<size_t>(cout)] += static_cast<double>(d_output.data[i]);
    for (int b = 0; b < n; ++b) {
        for (int ir = 0; ir < h; ++ir) {
            for (int ic = 0; ic < w; ++ic) {
                const int64_t in_off = (((static_cast<int64_t>(b) * h + ir) * w) + ic) * cin;
                const T* in_row = in_p + in_off;
                double* din_row = d_in.data() + in_off;
                for (int kr = 0; kr < 3; ++kr) {
                    const int orow = 2 * ir + kr - 1;
                    if (orow < 0 || orow >= oh) continue;
                    for (int kc = 0; kc < 3; ++kc) {
                        const int ocol = 2 * ic + kc - 1;
                        if (ocol < 0 || ocol >= ow) continue;
                        const T* go = go_p + (((static_cast<int64_t>(b) * oh + orow) * ow) + ocol) * cout;
                        const int64_t w_off = (static_cast<int64_t>(kr) * 3 + kc) * cin * cout;
                        for (int c = 0; c < cin; ++c) {
                            const double v = static_cast<double>(in_row[c]);
                            const T* wr = w_p + w_off + static_cast<int64_t>(c) * cout;
                            double* dwr = d_w.data() + w_off + static_cast<int64_t>(c) * cout;
                            double s = 0.0;
                            for (int f = 0; f < cout; ++f) {
                                const double g = static_cast<double>(go[f]);
                                dwr[f] += v * g;
                                s += static_cast<double>(wr[f]) * g;
                            }
                            din_row[c] += s;
                        }
                    }
                }
            }
        }
    }

    KernelGradsT<T> grads;
    grads.d_input = TensorT<T>(input.shape);
    grads.d_weights = TensorT<T>(weights.shape);
    grads.d_bias = TensorT<T>({cout});
    for (size_t i = 0; i < d_in.size(); ++i) grads.d_input.data[i] = static_cast<T>(d_in[i]);
    for (size_t i = 0; i < d_w.size(); ++i) grads.d_weights.data[i] = static_cast<T>(d_w[i]);
    for (size_t i = 0; i < d_b.size(); ++i) grads.d_bias.data[i] = static_cast<T>(d_b[i]);
    ensure_finite(grads.d_input, "tconv2d_backward");
    ensure_finite(grads.d_weights, "tconv2d_backward");
    ensure_finite(grads.d_bias, "tconv2d_backward");
    return grads;
}

/// Fully connected layer, row-vector convention: out = input * weights + bias.
template <class T>
TensorT<T> dense_forward(const TensorT<T>& input, const TensorT<T>& weights,
                         const TensorT<T>& bias) {
    if (input.rank() != 2) throw ShapeError("dense: input must be rank 2, got " + shape_str(input.shape));
    if (weights.rank() != 2 || weights.shape[0] != input.shape[1])
        throw ShapeError("dense: weights " + shape_str(weights.shape) +
                         " do not match input " + shape_str(input.shape));
    const int n = input.shape[0], din = input.shape[1], dout = weights.shape[1];
    if (bias.rank() != 1 || bias.shape[0] != dout)
        throw ShapeError("dense: bias must be rank 1 of size " + std::to_string(dout));

    TensorT<T> out({n, dout});
    std::vector<double> acc(static_cast<size_t>(dout));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < dout; ++j) acc[static_cast<size_t>(j)] = static_cast<double>(bias.data[static_cast<size_t>(j)]);
        const T* in_row = input.data.data() + static_cast<int64_t>(i) * din;
        for (int k = 0; k < din; ++k) {
            const double v = static_cast<double>(in_row[k]);
            const T* wr = weights.data.data() + static_cast<int64_t>(k) * dout;
            for (int j = 0; j < dout; ++j) acc[static_cast<size_t>(j)] += v * static_cast<double>(wr[j]);
        }
        T* orow = out.data.data() + static_cast<int64_t>(i) * dout;
        for (int j = 0; j < dout; ++j) orow[j] = static_cast<T>(acc[static_cast<size_t>(j)]);
    }
    ensure_finite(out, "dense_forward");
    return out;
}

/// d_weights = input^T * d_output; d_input = d_output * weights^T;
/// d_bias = column sums of d_output.
template <class T>
KernelGradsT<T> dense_backward(const TensorT<T>& input, const TensorT<T>& weights,
                               const TensorT<T>& d_output) {
    if (input.rank() != 2 || weights.rank() != 2 || weights.shape[0] != input.shape[1])
        throw ShapeError("dense_backward: bad input/weights shapes");
    const int n = input.shape[0], din = input.shape[1], dout = weights.shape[1];
    if (d_output.shape != std::vector<int>{n, dout})
        throw ShapeError("dense_backward: d_output shape " + shape_str(d_output.shape) +
                         " does not match forward output");

    std::vector<double> d_in(input.data.size(), 0.0);
    std::vector<double> d_w(weights.data.size(), 0.0);
    std::vector<double> d_b(static_cast<size_t>(dout), 0.0);
    for (int i = 0; i < n; ++i) {
        const T* go = d_output.data.data() + static_cast<int64_t>(i) * dout;
        const T* in_row = input.data.data() + static_cast<int64_t>(i) * din;
        for (int j = 0; j < dout; ++j) d_b[static_cast<size_t>(j)] += static_cast<double>(go[j]);
        for (int k = 0; k < din; ++k) {
            const double v = static_cast<double>(in_row[k]);
            const T* wr = weights.data.data() + static_cast<int64_t>(k) * dout;
            double* dwr = d_w.data() + static_cast<int64_t>(k) * dout;
            double s = 0.0;
            for (int j = 0; j < dout; ++j) {
                const double g = static_cast<double>(go[j]);
                dwr[j] += v * g;
                s += static_cast<double>(wr[j]) * g;
            }
            d_in[static_cast<size_t>(i) * din + static_cast<size_t>(k)] += s;
        }
    }

    KernelGradsT<T> grads;
    grads.d_input = TensorT<T>(input.shape);
    grads.d_weights = TensorT<T>(weights.shape);
    grads.d_bias = TensorT<T>({dout});
    for (size_t i = 0; i < d_in.size(); ++i) grads.d_input.data[i] = static_cast<T>(d_in[i]);
    for (size_t i = 0; i < d_w.size(); ++i) grads.d_weights.data[i] = static_cast<T>(d_w[i]);
    for (size_t i = 0; i < d_b.size(); ++i) grads.d_bias.data[i] = static_cast<T>(d_b[i]);
    return grads;
}

template <class T>
TensorT<T> relu(const TensorT<T>& x) {
    TensorT<T> out(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) out.data[i] = x.data[i] > T{0} ? x.data[i] : T{0};
    return out;
}

/// Subgradient at 0 is 0: passes d_output only where x > 0.
template <class T>
TensorT<T> relu_grad(const TensorT<T>& x, const TensorT<T>& d_output) {
    if (!same_shape(x, d_output)) throw ShapeError("relu_grad: shape mismatch");
    TensorT<T> out(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i)
        out.data[i] = x.data[i] > T{0} ? d_output.data[i] : T{0};
    return out;
}

template <class T>
TensorT<T> sigmoid(const TensorT<T>& x) {
    TensorT<T> out(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) {
        const double v = static_cast<double>(x.data[i]);
        const double y = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                                  : std::exp(v) / (1.0 + std::exp(v));
        out.data[i] = static_cast<T>(y);
    }
    ensure_finite(out, "sigmoid");
    return out;
}

/// Gradient from the saved output: d_output * y * (1 - y).
template <class T>
TensorT<T> sigmoid_grad(const TensorT<T>& output, const TensorT<T>& d_output) {
    if (!same_shape(output, d_output)) throw ShapeError("sigmoid_grad: shape mismatch");
    TensorT<T> out(output.shape);
    for (size_t i = 0; i < output.data.size(); ++i) {
        const double y = static_cast<double>(output.data[i]);
        out.data[i] = static_cast<T>(static_cast<double>(d_output.data[i]) * y * (1.0 - y));
    }
    return out;
}

/// Channel-axis concatenation, a's channels first.
template <class T>
TensorT<T> concat_channels(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.rank() != 4 || b.rank() != 4)
        throw ShapeError("concat_channels: inputs must be rank 4");
    if (a.shape[0] != b.shape[0] || a.shape[1] != b.shape[1] || a.shape[2] != b.shape[2])
        throw ShapeError("concat_channels: batch/spatial mismatch " + shape_str(a.shape) +
                         " vs " + shape_str(b.shape));
    const int n = a.shape[0], h = a.shape[1], w = a.shape[2];
    const int ca = a.shape[3], cb = b.shape[3];
    TensorT<T> out({n, h, w, ca + cb});
    const int64_t pixels = static_cast<int64_t>(n) * h * w;
    for (int64_t p = 0; p < pixels; ++p) {
        const T* ar = a.data.data() + p * ca;
        const T* br = b.data.data() + p * cb;
        T* orow = out.data.data() + p * (ca + cb);
        for (int c = 0; c < ca; ++c) orow[c] = ar[c];
        for (int c = 0; c < cb; ++c) orow[ca + c] = br[c];
    }
    return out;
}

/// Splits d_output back at the channel boundary ca.
template <class T>
std::pair<TensorT<T>, TensorT<T>> concat_split_grad(const TensorT<T>& d_output, int ca, int cb) {
    if (d_output.rank() != 4 || d_output.shape[3] != ca + cb)
        throw ShapeError("concat_split_grad: expected " + std::to_string(ca + cb) +
                         " channels, got " + shape_str(d_output.shape));
    const int n = d_output.shape[0], h = d_output.shape[1], w = d_output.shape[2];
    TensorT<T> da({n, h, w, ca});
    TensorT<T> db({n, h, w, cb});
    const int64_t pixels = static_cast<int64_t>(n) * h * w;
    for (int64_t p = 0; p < pixels; ++p) {
        const T* dr = d_output.data.data() + p * (ca + cb);
        T* ar = da.data.data() + p * ca;
        T* br = db.data.data() + p * cb;
        for (int c = 0; c < ca; ++c) ar[c] = dr[c];
        for (int c = 0; c < cb; ++c) br[c] = dr[ca + c];
    }
    return {std::move(da), std::move(db)};
}

/// Copies the vector v to every spatial position of an h x w map.
template <class T>
TensorT<T> broadcast_spatial(const TensorT<T>& v, int h, int w) {
    if (v.rank() != 2) throw ShapeError("broadcast_spatial: input must be rank 2");
    if (h <= 0 || w <= 0) throw ShapeError("broadcast_spatial: target size must be positive");
    const int n = v.shape[0], d = v.shape[1];
    TensorT<T> out({n, h, w, d});
    for (int b = 0; b < n; ++b) {
        const T* src = v.data.data() + static_cast<int64_t>(b) * d;
        for (int64_t p = 0; p < static_cast<int64_t>(h) * w; ++p) {
            T* dst = out.data.data() + (static_cast<int64_t>(b) * h * w + p) * d;
            for (int c = 0; c < d; ++c) dst[c] = src[c];
        }
    }
    return out;
}

/// Adjoint of broadcast_spatial: sum over the spatial positions.
template <class T>
TensorT<T> broadcast_spatial_grad(const TensorT<T>& d_output) {
    if (d_output.rank() != 4) throw ShapeError("broadcast_spatial_grad: input must be rank 4");
    const int n = d_output.shape[0], h = d_output.shape[1], w = d_output.shape[2], d = d_output.shape[3];
    TensorT<T> out({n, d});
    std::vector<double> acc(static_cast<size_t>(d));
    for (int b = 0; b < n; ++b) {
        for (int c = 0; c < d; ++c) acc[static_cast<size_t>(c)] = 0.0;
        for (int64_t p = 0; p < static_cast<int64_t>(h) * w; ++p) {
            const T* src = d_output.data.data() + (static_cast<int64_t>(b) * h * w + p) * d;
            for (int c = 0; c < d; ++c) acc[static_cast<size_t>(c)] += static_cast<double>(src[c]);
        }
        for (int c = 0; c < d; ++c) out.data[static_cast<size_t>(b) * d + static_cast<size_t>(c)] = static_cast<T>(acc[static_cast<size_t>(c)]);
    }
    return out;
}

/// Reshape n x h x w x c to n x (h*w*c). Same memory order, so this is a copy.
template <class T>
TensorT<T> flatten(const TensorT<T>& x) {
    if (x.rank() != 4) throw ShapeError("flatten: input must be rank 4");
    TensorT<T> out({x.shape[0], x.shape[1] * x.shape[2] * x.shape[3]});
    out.data = x.data;
    return out;
}

template <class T>
TensorT<T> unflatten(const TensorT<T>& x, int h, int w, int c) {
    if (x.rank() != 2 || x.shape[1] != h * w * c)
        throw ShapeError("unflatten: input " + shape_str(x.shape) + " does not match " +
                         std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c));
    TensorT<T> out({x.shape[0], h, w, c});
    out.data = x.data;
    return out;
}

}  // namespace idseg
