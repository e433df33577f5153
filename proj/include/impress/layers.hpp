#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "impress/tensor.hpp"

namespace impress {

struct Stride2 {
    int h = 1, w = 1;
};
struct Stride3 {
    int t = 1, h = 1, w = 1;
};
struct Window2 {
    int h = 1, w = 1;
};
struct Window3 {
    int t = 1, h = 1, w = 1;
};

// Parameter gradients keyed by parameter name, plus the input gradient.
// Every gradient has the shape of the tensor it differentiates.
template <typename T>
struct LayerGrads {
    std::map<std::string, Tensor<T>> params;
    Tensor<T> input;
};

namespace detail {

inline void require_axis_fits(int extent, int kernel, const char* op, const char* axis) {
    if (kernel < 1 || kernel > extent)
        throw std::invalid_argument(std::string(op) + ": kernel extent " + std::to_string(kernel) +
                                    " does not fit input extent " + std::to_string(extent) +
                                    " on axis " + axis);
}

inline void require_stride(int s, const char* op, const char* axis) {
    if (s < 1)
        throw std::invalid_argument(std::string(op) + ": stride must be >= 1 on axis " + axis);
}

inline int out_extent(int in, int k, int s) { return (in - k) / s + 1; }

inline void require_rank(const std::vector<int>& shape, int rank, const char* op, const char* what) {
    if (static_cast<int>(shape.size()) != rank)
        throw std::invalid_argument(std::string(op) + ": " + what + " must have rank " +
                                    std::to_string(rank) + ", got shape " + shape_str(shape));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 3D convolution (valid, no padding).
// output[o,t,h,w] = bias[o] + sum_{c,i,j,k} input[c, t*sT+i, h*sH+j, w*sW+k] * weight[o,c,i,j,k]
// Accumulation order per output cell is fixed: bias first, then the weight
// lattice in row-major (c,i,j,k) order, so results are bit-reproducible.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> conv3d_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                         Stride3 stride) {
    detail::require_rank(input.shape, 4, "conv3d", "input");
    detail::require_rank(weight.shape, 5, "conv3d", "weight");
    detail::require_rank(bias.shape, 1, "conv3d", "bias");
    const int C = input.dim(0), Ti = input.dim(1), Hi = input.dim(2), Wi = input.dim(3);
    const int O = weight.dim(0), kT = weight.dim(2), kH = weight.dim(3), kW = weight.dim(4);
    if (weight.dim(1) != C)
        throw std::invalid_argument("conv3d: channel axis mismatch, input has " + std::to_string(C) +
                                    " channels, weight expects " + std::to_string(weight.dim(1)));
    if (bias.dim(0) != O)
        throw std::invalid_argument("conv3d: bias axis has " + std::to_string(bias.dim(0)) +
                                    " entries, weight has " + std::to_string(O) + " output channels");
    detail::require_axis_fits(Ti, kT, "conv3d", "t");
    detail::require_axis_fits(Hi, kH, "conv3d", "h");
    detail::require_axis_fits(Wi, kW, "conv3d", "w");
    detail::require_stride(stride.t, "conv3d", "t");
    detail::require_stride(stride.h, "conv3d", "h");
    detail::require_stride(stride.w, "conv3d", "w");

    const int To = detail::out_extent(Ti, kT, stride.t);
    const int Ho = detail::out_extent(Hi, kH, stride.h);
    const int Wo = detail::out_extent(Wi, kW, stride.w);
    Tensor<T> out({O, To, Ho, Wo});

    const T* in = input.data.data();
    const T* wt = weight.data.data();
    T* o_ = out.data.data();
    const size_t out_per_ch = static_cast<size_t>(To) * Ho * Wo;

    for (int o = 0; o < O; ++o) {
        T* dst = o_ + o * out_per_ch;
        const T b = bias[static_cast<size_t>(o)];
        for (size_t i = 0; i < out_per_ch; ++i) dst[i] = b;
        // Kernel lattice outermost: every output cell receives its terms in
        // the same (c,i,j,k) order while the innermost loop runs over
        // independent output cells.
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < kT; ++i)
                for (int j = 0; j < kH; ++j)
                    for (int k = 0; k < kW; ++k) {
                        const T wv = wt[((((static_cast<size_t>(o) * C + c) * kT + i) * kH + j) * kW + k)];
                        for (int t = 0; t < To; ++t)
                            for (int h = 0; h < Ho; ++h) {
                                const T* src = in + ((static_cast<size_t>(c) * Ti + t * stride.t + i) * Hi +
                                                     h * stride.h + j) * Wi + k;
                                T* row = dst + (static_cast<size_t>(t) * Ho + h) * Wo;
                                if (stride.w == 1) {
                                    for (int x = 0; x < Wo; ++x) row[x] += wv * src[x];
                                } else {
                                    for (int x = 0; x < Wo; ++x) row[x] += wv * src[x * stride.w];
                                }
                            }
                    }
    }
    return out;
}

template <typename T>
LayerGrads<T> conv3d_backward(const Tensor<T>& input, const Tensor<T>& weight,
                              const Tensor<T>& grad_out, Stride3 stride) {
    detail::require_rank(grad_out.shape, 4, "conv3d_backward", "grad_out");
    const int C = input.dim(0), Ti = input.dim(1), Hi = input.dim(2), Wi = input.dim(3);
    const int O = weight.dim(0), kT = weight.dim(2), kH = weight.dim(3), kW = weight.dim(4);
    const int To = detail::out_extent(Ti, kT, stride.t);
    const int Ho = detail::out_extent(Hi, kH, stride.h);
    const int Wo = detail::out_extent(Wi, kW, stride.w);
    if (grad_out.shape != std::vector<int>{O, To, Ho, Wo})
        throw std::invalid_argument("conv3d_backward: grad_out shape " + shape_str(grad_out.shape) +
                                    " does not match forward output " + shape_str({O, To, Ho, Wo}));

    LayerGrads<T> g;
    g.params.emplace("weight", zeros_like(weight));
    g.params.emplace("bias", Tensor<T>({O}));
    g.input = zeros_like(input);
    Tensor<T>& dw = g.params.at("weight");
    Tensor<T>& db = g.params.at("bias");

    const T* in = input.data.data();
    const T* wt = weight.data.data();
    const T* go = grad_out.data.data();
    const size_t out_per_ch = static_cast<size_t>(To) * Ho * Wo;

    for (int o = 0; o < O; ++o) {
        const T* gsrc = go + o * out_per_ch;
        T acc = T(0);
        for (size_t i = 0; i < out_per_ch; ++i) acc += gsrc[i];
        db[static_cast<size_t>(o)] = acc;

        for (int c = 0; c < C; ++c)
            for (int i = 0; i < kT; ++i)
                for (int j = 0; j < kH; ++j)
                    for (int k = 0; k < kW; ++k) {
                        const size_t widx = (((static_cast<size_t>(o) * C + c) * kT + i) * kH + j) * kW + k;
                        const T wv = wt[widx];
                        T wacc = T(0);
                        for (int t = 0; t < To; ++t)
                            for (int h = 0; h < Ho; ++h) {
                                const T* grow = gsrc + (static_cast<size_t>(t) * Ho + h) * Wo;
                                const size_t base = ((static_cast<size_t>(c) * Ti + t * stride.t + i) * Hi +
                                                     h * stride.h + j) * Wi + k;
                                const T* irow = in + base;
                                T* drow = g.input.data.data() + base;
                                for (int x = 0; x < Wo; ++x) {
                                    wacc += grow[x] * irow[static_cast<size_t>(x) * stride.w];
                                    drow[static_cast<size_t>(x) * stride.w] += grow[x] * wv;
                                }
                            }
                        dw[widx] += wacc;
                    }
    }
    return g;
}

// ---------------------------------------------------------------------------
// 2D convolution (valid), same contracts as the 3D version one axis down.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                         Stride2 stride) {
    detail::require_rank(input.shape, 3, "conv2d", "input");
    detail::require_rank(weight.shape, 4, "conv2d", "weight");
    detail::require_rank(bias.shape, 1, "conv2d", "bias");
    const int C = input.dim(0), Hi = input.dim(1), Wi = input.dim(2);
    const int O = weight.dim(0), kH = weight.dim(2), kW = weight.dim(3);
    if (weight.dim(1) != C)
        throw std::invalid_argument("conv2d: channel axis mismatch, input has " + std::to_string(C) +
                                    " channels, weight expects " + std::to_string(weight.dim(1)));
    if (bias.dim(0) != O)
        throw std::invalid_argument("conv2d: bias axis has " + std::to_string(bias.dim(0)) +
                                    " entries, weight has " + std::to_string(O) + " output channels");
    detail::require_axis_fits(Hi, kH, "conv2d", "h");
    detail::require_axis_fits(Wi, kW, "conv2d", "w");
    detail::require_stride(stride.h, "conv2d", "h");
    detail::require_stride(stride.w, "conv2d", "w");

    const int Ho = detail::out_extent(Hi, kH, stride.h);
    const int Wo = detail::out_extent(Wi, kW, stride.w);
    Tensor<T> out({O, Ho, Wo});

    const T* in = input.data.data();
    const T* wt = weight.data.data();
    const size_t out_per_ch = static_cast<size_t>(Ho) * Wo;

    for (int o = 0; o < O; ++o) {
        T* dst = out.data.data() + o * out_per_ch;
        const T b = bias[static_cast<size_t>(o)];
        for (size_t i = 0; i < out_per_ch; ++i) dst[i] = b;
        for (int c = 0; c < C; ++c)
            for (int j = 0; j < kH; ++j)
                for (int k = 0; k < kW; ++k) {
                    const T wv = wt[(((static_cast<size_t>(o) * C + c) * kH + j) * kW + k)];
                    for (int h = 0; h < Ho; ++h) {
                        const T* src = in + (static_cast<size_t>(c) * Hi + h * stride.h + j) * Wi + k;
                        T* row = dst + static_cast<size_t>(h) * Wo;
                        if (stride.w == 1) {
                            for (int x = 0; x < Wo; ++x) row[x] += wv * src[x];
                        } else {
                            for (int x = 0; x < Wo; ++x) row[x] += wv * src[x * stride.w];
                        }
                    }
                }
    }
    return out;
}

template <typename T>
LayerGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight,
                              const Tensor<T>& grad_out, Stride2 stride) {
    detail::require_rank(grad_out.shape, 3, "conv2d_backward", "grad_out");
    const int C = input.dim(0), Hi = input.dim(1), Wi = input.dim(2);
    const int O = weight.dim(0), kH = weight.dim(2), kW = weight.dim(3);
    const int Ho = detail::out_extent(Hi, kH, stride.h);
    const int Wo = detail::out_extent(Wi, kW, stride.w);
    if (grad_out.shape != std::vector<int>{O, Ho, Wo})
        throw std::invalid_argument("conv2d_backward: grad_out shape " + shape_str(grad_out.shape) +
                                    " does not match forward output " + shape_str({O, Ho, Wo}));

    LayerGrads<T> g;
    g.params.emplace("weight", zeros_like(weight));
    g.params.emplace("bias", Tensor<T>({O}));
    g.input = zeros_like(input);
    Tensor<T>& dw = g.params.at("weight");
    Tensor<T>& db = g.params.at("bias");

    const T* in = input.data.data();
    const T* wt = weight.data.data();
    const T* go = grad_out.data.data();
    const size_t out_per_ch = static_cast<size_t>(Ho) * Wo;

    for (int o = 0; o < O; ++o) {
        const T* gsrc = go + o * out_per_ch;
        T acc = T(0);
        for (size_t i = 0; i < out_per_ch; ++i) acc += gsrc[i];
        db[static_cast<size_t>(o)] = acc;

        for (int c = 0; c < C; ++c)
            for (int j = 0; j < kH; ++j)
                for (int k = 0; k < kW; ++k) {
                    const size_t widx = ((static_cast<size_t>(o) * C + c) * kH + j) * kW + k;
                    const T wv = wt[widx];
                    T wacc = T(0);
                    for (int h = 0; h < Ho; ++h) {
                        const T* grow = gsrc + static_cast<size_t>(h) * Wo;
                        const size_t base = (static_cast<size_t>(c) * Hi + h * stride.h + j) * Wi + k;
                        const T* irow = in + base;
                        T* drow = g.input.data.data() + base;
                        for (int x = 0; x < Wo; ++x) {
                            wacc += grow[x] * irow[static_cast<size_t>(x) * stride.w];
                            drow[static_cast<size_t>(x) * stride.w] += grow[x] * wv;
                        }
                    }
                    dw[widx] += wacc;
                }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Max pooling. Valid pooling only and the window must tile the axis exactly
// given the stride. Ties go to the lowest input linear index, which makes the
// backward routing deterministic. argmax holds input linear indices.
// ---------------------------------------------------------------------------

template <typename T>
struct PoolResult {
    Tensor<T> output;
    std::vector<size_t> argmax;
};

namespace detail {
inline void require_pool_axis(int extent, int window, int stride, const char* op, const char* axis) {
    if (window < 1 || window > extent)
        throw std::invalid_argument(std::string(op) + ": window " + std::to_string(window) +
                                    " does not fit input extent " + std::to_string(extent) +
                                    " on axis " + axis);
    require_stride(stride, op, axis);
    if ((extent - window) % stride != 0)
        throw std::invalid_argument(std::string(op) + ": window/stride leave a remainder on axis " +
                                    axis + " (extent " + std::to_string(extent) + ", window " +
                                    std::to_string(window) + ", stride " + std::to_string(stride) + ")");
}
}  // namespace detail

template <typename T>
PoolResult<T> maxpool3d_forward(const Tensor<T>& input, Window3 window, Stride3 stride) {
    detail::require_rank(input.shape, 4, "maxpool3d", "input");
    const int C = input.dim(0), Ti = input.dim(1), Hi = input.dim(2), Wi = input.dim(3);
    detail::require_pool_axis(Ti, window.t, stride.t, "maxpool3d", "t");
    detail::require_pool_axis(Hi, window.h, stride.h, "maxpool3d", "h");
    detail::require_pool_axis(Wi, window.w, stride.w, "maxpool3d", "w");
    const int To = detail::out_extent(Ti, window.t, stride.t);
    const int Ho = detail::out_extent(Hi, window.h, stride.h);
    const int Wo = detail::out_extent(Wi, window.w, stride.w);

    PoolResult<T> r{Tensor<T>({C, To, Ho, Wo}), {}};
    r.argmax.resize(r.output.numel());
    const T* in = input.data.data();
    size_t out_i = 0;
    for (int c = 0; c < C; ++c)
        for (int t = 0; t < To; ++t)
            for (int h = 0; h < Ho; ++h)
                for (int w = 0; w < Wo; ++w, ++out_i) {
                    T best = -std::numeric_limits<T>::infinity();
                    size_t best_idx = 0;
                    for (int i = 0; i < window.t; ++i)
                        for (int j = 0; j < window.h; ++j)
                            for (int k = 0; k < window.w; ++k) {
                                const size_t idx =
                                    ((static_cast<size_t>(c) * Ti + t * stride.t + i) * Hi +
                                     h * stride.h + j) * Wi + w * stride.w + k;
                                if (in[idx] > best) {
                                    best = in[idx];
                                    best_idx = idx;
                                }
                            }
                    r.output[out_i] = best;
                    r.argmax[out_i] = best_idx;
                }
    return r;
}

template <typename T>
PoolResult<T> maxpool2d_forward(const Tensor<T>& input, Window2 window, Stride2 stride) {
    detail::require_rank(input.shape, 3, "maxpool2d", "input");
    const int C = input.dim(0), Hi = input.dim(1), Wi = input.dim(2);
    detail::require_pool_axis(Hi, window.h, stride.h, "maxpool2d", "h");
    detail::require_pool_axis(Wi, window.w, stride.w, "maxpool2d", "w");
    const int Ho = detail::out_extent(Hi, window.h, stride.h);
    const int Wo = detail::out_extent(Wi, window.w, stride.w);

    PoolResult<T> r{Tensor<T>({C, Ho, Wo}), {}};
    r.argmax.resize(r.output.numel());
    const T* in = input.data.data();
    size_t out_i = 0;
    for (int c = 0; c < C; ++c)
        for (int h = 0; h < Ho; ++h)
            for (int w = 0; w < Wo; ++w, ++out_i) {
                T best = -std::numeric_limits<T>::infinity();
                size_t best_idx = 0;
                for (int j = 0; j < window.h; ++j)
                    for (int k = 0; k < window.w; ++k) {
                        const size_t idx = (static_cast<size_t>(c) * Hi + h * stride.h + j) * Wi +
                                           w * stride.w + k;
                        if (in[idx] > best) {
                            best = in[idx];
                            best_idx = idx;
                        }
                    }
                r.output[out_i] = best;
                r.argmax[out_i] = best_idx;
            }
    return r;
}

// Routes grad_out back to the cells that won the max.
template <typename T>
Tensor<T> maxpool_backward(const std::vector<int>& input_shape, const std::vector<size_t>& argmax,
                           const Tensor<T>& grad_out) {
    if (argmax.size() != grad_out.numel())
        throw std::invalid_argument("maxpool_backward: argmax count " + std::to_string(argmax.size()) +
                                    " does not match grad_out numel " + std::to_string(grad_out.numel()));
    Tensor<T> din(input_shape);
    for (size_t i = 0; i < argmax.size(); ++i) din[argmax[i]] += grad_out[i];
    return din;
}

// ---------------------------------------------------------------------------
// Fully connected layer on a rank-1 input: out = weight . input + bias.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> linear_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
    detail::require_rank(input.shape, 1, "linear", "input");
    detail::require_rank(weight.shape, 2, "linear", "weight");
    detail::require_rank(bias.shape, 1, "linear", "bias");
    const int Din = input.dim(0), Dout = weight.dim(0);
    if (weight.dim(1) != Din)
        throw std::invalid_argument("linear: input axis has " + std::to_string(Din) +
                                    " entries, weight expects " + std::to_string(weight.dim(1)));
    if (bias.dim(0) != Dout)
        throw std::invalid_argument("linear: bias axis has " + std::to_string(bias.dim(0)) +
                                    " entries, weight has " + std::to_string(Dout) + " rows");
    Tensor<T> out({Dout});
    const T* x = input.data.data();
    for (int o = 0; o < Dout; ++o) {
        const T* wrow = weight.data.data() + static_cast<size_t>(o) * Din;
        T acc = bias[static_cast<size_t>(o)];
        for (int i = 0; i < Din; ++i) acc += wrow[i] * x[i];
        out[static_cast<size_t>(o)] = acc;
    }
    return out;
}

template <typename T>
LayerGrads<T> linear_backward(const Tensor<T>& input, const Tensor<T>& weight,
                              const Tensor<T>& grad_out) {
    detail::require_rank(grad_out.shape, 1, "linear_backward", "grad_out");
    const int Din = input.dim(0), Dout = weight.dim(0);
    if (grad_out.dim(0) != Dout)
        throw std::invalid_argument("linear_backward: grad_out axis has " +
                                    std::to_string(grad_out.dim(0)) + " entries, expected " +
                                    std::to_string(Dout));
    LayerGrads<T> g;
    g.params.emplace("weight", zeros_like(weight));
    g.params.emplace("bias", grad_out);
    g.input = zeros_like(input);
    Tensor<T>& dw = g.params.at("weight");
    for (int o = 0; o < Dout; ++o) {
        const T gv = grad_out[static_cast<size_t>(o)];
        const T* wrow = weight.data.data() + static_cast<size_t>(o) * Din;
        T* dwrow = dw.data.data() + static_cast<size_t>(o) * Din;
        for (int i = 0; i < Din; ++i) {
            dwrow[i] = gv * input[static_cast<size_t>(i)];
            g.input[static_cast<size_t>(i)] += wrow[i] * gv;
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Elementwise activations.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    Tensor<T> out = x;
    for (T& v : out.data) v = v > T(0) ? v : T(0);
    return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_out) {
    require_same_shape(input, grad_out, "relu_backward");
    Tensor<T> din = grad_out;
    for (size_t i = 0; i < din.numel(); ++i)
        if (!(input[i] > T(0))) din[i] = T(0);
    return din;
}

template <typename T>
T sigmoid_scalar(T x) {
    const T s = T(1) / (T(1) + std::exp(-x));
    // Keep the open interval (0,1) even where exp underflows.
    const T lo = std::numeric_limits<T>::min();
    const T hi = T(1) - std::numeric_limits<T>::epsilon();
    return std::min(std::max(s, lo), hi);
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    Tensor<T> out = x;
    for (T& v : out.data) v = sigmoid_scalar(v);
    return out;
}

// Takes the forward *output* s and uses s(1-s).
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& output, const Tensor<T>& grad_out) {
    require_same_shape(output, grad_out, "sigmoid_backward");
    Tensor<T> din = grad_out;
    for (size_t i = 0; i < din.numel(); ++i) din[i] *= output[i] * (T(1) - output[i]);
    return din;
}

// ---------------------------------------------------------------------------
// Mean squared error over all elements.
// ---------------------------------------------------------------------------

template <typename T>
T mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    require_same_shape(pred, target, "mse_loss");
    T acc = T(0);
    for (size_t i = 0; i < pred.numel(); ++i) {
        const T d = pred[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<T>(pred.numel());
}

template <typename T>
Tensor<T> mse_backward(const Tensor<T>& pred, const Tensor<T>& target) {
    require_same_shape(pred, target, "mse_backward");
    Tensor<T> din = zeros_like(pred);
    const T scale = T(2) / static_cast<T>(pred.numel());
    for (size_t i = 0; i < pred.numel(); ++i) din[i] = scale * (pred[i] - target[i]);
    return din;
}

}  // namespace impress
