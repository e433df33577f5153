#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "impress/errors.hpp"
#include "impress/layers.hpp"
#include "impress/lstm.hpp"
#include "impress/rng.hpp"
#include "impress/sampler.hpp"
#include "impress/tensor.hpp"

namespace impress {

template <typename T>
struct NamedTensor {
    std::string name;
    Tensor<T>* tensor;
};

// A parameter is a bias iff its last name component starts with 'b'
// ("bias", "b_i", ...). Initialization and the optimizer's bias toggle both
// key off this.
inline bool is_bias_param(const std::string& name) {
    const size_t dot = name.rfind('.');
    const size_t start = dot == std::string::npos ? 0 : dot + 1;
    return start < name.size() && name[start] == 'b';
}

// One training/inference example: n temporally ordered frames plus the fixed
// per-partition audio feature matrix.
template <typename T>
struct BimodalInput {
    std::vector<Tensor<T>> frames;  // each (channels, H, W)
    Tensor<T> audio;                // (n_partitions, audio_dim)
};

template <typename T>
struct LossGrads {
    T loss = T(0);
    std::vector<Tensor<T>> grads;  // aligned with tensors() order
};

namespace detail {

template <typename T>
void validate_bimodal(const BimodalInput<T>& in, int frames, int channels, int image,
                      int audio_dim, const char* who) {
    if (static_cast<int>(in.frames.size()) != frames)
        throw std::invalid_argument(std::string(who) + ": expected " + std::to_string(frames) +
                                    " frames, got " + std::to_string(in.frames.size()));
    const std::vector<int> fshape{channels, image, image};
    for (const auto& f : in.frames)
        if (f.shape != fshape)
            throw std::invalid_argument(std::string(who) + ": frame shape " + shape_str(f.shape) +
                                        ", expected " + shape_str(fshape));
    if (in.audio.shape != std::vector<int>{frames, audio_dim})
        throw std::invalid_argument(std::string(who) + ": audio shape " + shape_str(in.audio.shape) +
                                    ", expected " + shape_str({frames, audio_dim}));
}

template <typename T>
void validate_target(const Tensor<T>& target, int outputs, const char* who) {
    if (target.shape != std::vector<int>{outputs})
        throw std::invalid_argument(std::string(who) + ": target shape " + shape_str(target.shape) +
                                    ", expected " + shape_str({outputs}));
    for (const T v : target.data)
        if (!(v >= T(0) && v <= T(1)))
            throw std::invalid_argument(std::string(who) + ": target value outside [0,1]");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 3D-convolution architecture. The numbers below are the only place the
// layer geometry lives; the downsized clone used by gradient checks swaps in
// a different table.
// ---------------------------------------------------------------------------

struct Conv3dArch {
    int in_channels = 3, frames = 6, image = 112, audio_dim = 68;
    int c1_out = 8;
    Window3 c1_k{3, 5, 5};
    Window3 p1_win{2, 2, 2};
    Stride3 p1_str{2, 2, 2};
    int c2_out = 16;
    Window3 c2_k{2, 5, 5};
    Window3 p2_win{1, 2, 2};
    Stride3 p2_str{1, 2, 2};
    int c3_out = 1;
    Window3 c3_k{1, 5, 5};
    int audio_proj = 100, fusion_hidden = 200, outputs = 5;

    static Conv3dArch full() { return {}; }

    // Small enough for finite-difference sweeps, same layer sequence.
    static Conv3dArch tiny() {
        Conv3dArch a;
        a.frames = 2;
        a.image = 16;
        a.audio_dim = 6;
        a.c1_out = 4;
        a.c1_k = {2, 3, 3};
        a.p1_win = {1, 2, 2};
        a.p1_str = {1, 2, 2};
        a.c2_out = 4;
        a.c2_k = {1, 2, 2};
        a.p2_win = {1, 2, 2};
        a.p2_str = {1, 2, 2};
        a.c3_out = 1;
        a.c3_k = {1, 2, 2};
        a.audio_proj = 8;
        a.fusion_hidden = 10;
        return a;
    }
};

template <typename T>
class Conv3dModel {
public:
    static constexpr uint8_t kArchTag = 0;
    static constexpr const char* kArchName = "conv3d";

    explicit Conv3dModel(const Conv3dArch& arch = Conv3dArch::full())
        : arch_(arch),
          conv1_w({arch.c1_out, arch.in_channels, arch.c1_k.t, arch.c1_k.h, arch.c1_k.w}),
          conv1_b({arch.c1_out}),
          conv2_w({arch.c2_out, arch.c1_out, arch.c2_k.t, arch.c2_k.h, arch.c2_k.w}),
          conv2_b({arch.c2_out}),
          conv3_w({arch.c3_out, arch.c2_out, arch.c3_k.t, arch.c3_k.h, arch.c3_k.w}),
          conv3_b({arch.c3_out}) {
        auto shrink = [](int v, int k) { return v - k + 1; };
        auto pool = [](int v, int w, int s) { return (v - w) / s + 1; };
        int t = arch.frames, s = arch.image;
        t = shrink(t, arch.c1_k.t), s = shrink(s, arch.c1_k.h);
        t = pool(t, arch.p1_win.t, arch.p1_str.t), s = pool(s, arch.p1_win.h, arch.p1_str.h);
        t = shrink(t, arch.c2_k.t), s = shrink(s, arch.c2_k.h);
        t = pool(t, arch.p2_win.t, arch.p2_str.t), s = pool(s, arch.p2_win.h, arch.p2_str.h);
        t = shrink(t, arch.c3_k.t), s = shrink(s, arch.c3_k.h);
        visual_dim_ = arch.c3_out * t * s * s;
        audio_w = Tensor<T>({arch.audio_proj, arch.frames * arch.audio_dim});
        audio_b = Tensor<T>({arch.audio_proj});
        fc1_w = Tensor<T>({arch.fusion_hidden, fused_dim()});
        fc1_b = Tensor<T>({arch.fusion_hidden});
        fc2_w = Tensor<T>({arch.outputs, arch.fusion_hidden});
        fc2_b = Tensor<T>({arch.outputs});
    }

    const Conv3dArch& arch() const { return arch_; }
    int n_partitions() const { return arch_.frames; }
    int audio_dim() const { return arch_.audio_dim; }
    int image_size() const { return arch_.image; }
    int outputs() const { return arch_.outputs; }
    int visual_dim() const { return visual_dim_; }
    int fused_dim() const { return arch_.audio_proj + visual_dim_; }

    std::vector<NamedTensor<T>> tensors() {
        return {{"conv1.weight", &conv1_w}, {"conv1.bias", &conv1_b},
                {"conv2.weight", &conv2_w}, {"conv2.bias", &conv2_b},
                {"conv3.weight", &conv3_w}, {"conv3.bias", &conv3_b},
                {"audio_fc.weight", &audio_w}, {"audio_fc.bias", &audio_b},
                {"fc1.weight", &fc1_w}, {"fc1.bias", &fc1_b},
                {"fc2.weight", &fc2_w}, {"fc2.bias", &fc2_b}};
    }

    Tensor<T> predict(const BimodalInput<T>& in) const { return run(in).out; }

    LossGrads<T> loss_and_grads(const BimodalInput<T>& in, const Tensor<T>& target) const {
        detail::validate_target(target, arch_.outputs, "conv3d");
        Trace tr = run(in);
        LossGrads<T> lg;
        lg.loss = mse_loss(tr.out, target);

        Tensor<T> dlogits = sigmoid_backward(tr.out, mse_backward(tr.out, target));
        LayerGrads<T> g_fc2 = linear_backward(tr.rf1, fc2_w, dlogits);
        Tensor<T> df1 = relu_backward(tr.f1, g_fc2.input);
        LayerGrads<T> g_fc1 = linear_backward(tr.fused, fc1_w, df1);

        Tensor<T> daudio({arch_.audio_proj});
        for (int i = 0; i < arch_.audio_proj; ++i) daudio[i] = g_fc1.input[i];
        Tensor<T> dvis(tr.a3.shape);
        for (int i = 0; i < visual_dim_; ++i)
            dvis[i] = g_fc1.input[static_cast<size_t>(arch_.audio_proj) + i];

        LayerGrads<T> g_audio = linear_backward(tr.audio_flat, audio_w, daudio);
        LayerGrads<T> g_c3 = conv3d_backward(tr.p2.output, conv3_w, dvis, {1, 1, 1});
        Tensor<T> dr2 = maxpool_backward(tr.a2.shape, tr.p2.argmax, g_c3.input);
        Tensor<T> da2 = relu_backward(tr.a2, dr2);
        LayerGrads<T> g_c2 = conv3d_backward(tr.p1.output, conv2_w, da2, {1, 1, 1});
        Tensor<T> dr1 = maxpool_backward(tr.a1.shape, tr.p1.argmax, g_c2.input);
        Tensor<T> da1 = relu_backward(tr.a1, dr1);
        LayerGrads<T> g_c1 = conv3d_backward(tr.x, conv1_w, da1, {1, 1, 1});

        lg.grads = {std::move(g_c1.params.at("weight")), std::move(g_c1.params.at("bias")),
                    std::move(g_c2.params.at("weight")), std::move(g_c2.params.at("bias")),
                    std::move(g_c3.params.at("weight")), std::move(g_c3.params.at("bias")),
                    std::move(g_audio.params.at("weight")), std::move(g_audio.params.at("bias")),
                    std::move(g_fc1.params.at("weight")), std::move(g_fc1.params.at("bias")),
                    std::move(g_fc2.params.at("weight")), std::move(g_fc2.params.at("bias"))};
        return lg;
    }

private:
    struct Trace {
        Tensor<T> x, a1;
        PoolResult<T> p1;
        Tensor<T> a2;
        PoolResult<T> p2;
        Tensor<T> a3, audio_flat, fused, f1, rf1, out;
    };

    // Pipeline: conv3d -> relu -> pool -> conv3d -> relu -> pool -> conv3d
    // -> flatten; audio flatten -> linear; fuse [audio | visual] -> linear
    // -> relu -> linear -> sigmoid.
    Trace run(const BimodalInput<T>& in) const {
        detail::validate_bimodal(in, arch_.frames, arch_.in_channels, arch_.image, arch_.audio_dim,
                                 "conv3d");
        Trace tr;
        // Frames stack into one (channels, time, H, W) block.
        tr.x = Tensor<T>({arch_.in_channels, arch_.frames, arch_.image, arch_.image});
        const size_t plane = static_cast<size_t>(arch_.image) * arch_.image;
        for (int t = 0; t < arch_.frames; ++t)
            for (int c = 0; c < arch_.in_channels; ++c)
                std::copy(in.frames[t].data.begin() + c * plane,
                          in.frames[t].data.begin() + (c + 1) * plane,
                          tr.x.data.begin() + (static_cast<size_t>(c) * arch_.frames + t) * plane);

        tr.a1 = conv3d_forward(tr.x, conv1_w, conv1_b, {1, 1, 1});
        tr.p1 = maxpool3d_forward(relu(tr.a1), arch_.p1_win, arch_.p1_str);
        tr.a2 = conv3d_forward(tr.p1.output, conv2_w, conv2_b, {1, 1, 1});
        tr.p2 = maxpool3d_forward(relu(tr.a2), arch_.p2_win, arch_.p2_str);
        tr.a3 = conv3d_forward(tr.p2.output, conv3_w, conv3_b, {1, 1, 1});

        tr.audio_flat = Tensor<T>({arch_.frames * arch_.audio_dim}, in.audio.data);
        Tensor<T> audio_p = linear_forward(tr.audio_flat, audio_w, audio_b);

        tr.fused = Tensor<T>({fused_dim()});
        for (int i = 0; i < arch_.audio_proj; ++i) tr.fused[i] = audio_p[i];
        for (int i = 0; i < visual_dim_; ++i)
            tr.fused[static_cast<size_t>(arch_.audio_proj) + i] = tr.a3[i];

        tr.f1 = linear_forward(tr.fused, fc1_w, fc1_b);
        tr.rf1 = relu(tr.f1);
        tr.out = sigmoid(linear_forward(tr.rf1, fc2_w, fc2_b));
        return tr;
    }

    Conv3dArch arch_;
    int visual_dim_ = 0;

public:
    Tensor<T> conv1_w, conv1_b, conv2_w, conv2_b, conv3_w, conv3_b;
    Tensor<T> audio_w, audio_b, fc1_w, fc1_b, fc2_w, fc2_b;
};

// ---------------------------------------------------------------------------
// LSTM architecture: shared per-frame spatial encoder, shared per-step
// projections, recurrent core, shared head on every step's hidden state.
// ---------------------------------------------------------------------------

struct LstmArch {
    int in_channels = 3, steps = 6, image = 112, audio_dim = 68;
    int c1_out = 8, c1_k = 9;
    int c2_out = 16, c2_k = 5;
    int c3_out = 16, c3_k = 9;
    int visual_proj = 128, audio_proj = 32, hidden = 128, outputs = 5;

    static LstmArch full() { return {}; }

    static LstmArch tiny() {
        LstmArch a;
        a.steps = 2;
        a.image = 16;
        a.audio_dim = 6;
        a.c1_out = 4;
        a.c1_k = 3;
        a.c2_out = 4;
        a.c2_k = 2;
        a.c3_out = 4;
        a.c3_k = 2;
        a.visual_proj = 6;
        a.audio_proj = 4;
        a.hidden = 8;
        return a;
    }
};

template <typename T>
struct LstmForward {
    Tensor<T> per_step;  // (steps, outputs)
    Tensor<T> averaged;  // (outputs), arithmetic mean over steps
};

template <typename T>
class LstmModel {
public:
    static constexpr uint8_t kArchTag = 1;
    static constexpr const char* kArchName = "lstm";

    explicit LstmModel(const LstmArch& arch = LstmArch::full())
        : arch_(arch),
          conv1_w({arch.c1_out, arch.in_channels, arch.c1_k, arch.c1_k}),
          conv1_b({arch.c1_out}),
          conv2_w({arch.c2_out, arch.c1_out, arch.c2_k, arch.c2_k}),
          conv2_b({arch.c2_out}),
          conv3_w({arch.c3_out, arch.c2_out, arch.c3_k, arch.c3_k}),
          conv3_b({arch.c3_out}),
          lstm_(arch.audio_proj + arch.visual_proj, arch.hidden),
          head_w({arch.outputs, arch.hidden}),
          head_b({arch.outputs}) {
        auto shrink = [](int v, int k) { return v - k + 1; };
        int s = arch.image;
        s = shrink(s, arch.c1_k) / 2;
        s = shrink(s, arch.c2_k) / 2;
        s = shrink(s, arch.c3_k) / 2;
        flatten_dim_ = arch.c3_out * s * s;
        visual_w = Tensor<T>({arch.visual_proj, flatten_dim_});
        visual_b = Tensor<T>({arch.visual_proj});
        audio_w = Tensor<T>({arch.audio_proj, arch.audio_dim});
        audio_b = Tensor<T>({arch.audio_proj});
    }

    const LstmArch& arch() const { return arch_; }
    int n_partitions() const { return arch_.steps; }
    int audio_dim() const { return arch_.audio_dim; }
    int image_size() const { return arch_.image; }
    int outputs() const { return arch_.outputs; }
    int flatten_dim() const { return flatten_dim_; }
    int step_dim() const { return arch_.audio_proj + arch_.visual_proj; }

    std::vector<NamedTensor<T>> tensors() {
        return {{"conv1.weight", &conv1_w}, {"conv1.bias", &conv1_b},
                {"conv2.weight", &conv2_w}, {"conv2.bias", &conv2_b},
                {"conv3.weight", &conv3_w}, {"conv3.bias", &conv3_b},
                {"visual_fc.weight", &visual_w}, {"visual_fc.bias", &visual_b},
                {"audio_fc.weight", &audio_w}, {"audio_fc.bias", &audio_b},
                {"lstm.W_i", &lstm_.W_i}, {"lstm.W_f", &lstm_.W_f},
                {"lstm.W_o", &lstm_.W_o}, {"lstm.W_g", &lstm_.W_g},
                {"lstm.U_i", &lstm_.U_i}, {"lstm.U_f", &lstm_.U_f},
                {"lstm.U_o", &lstm_.U_o}, {"lstm.U_g", &lstm_.U_g},
                {"lstm.b_i", &lstm_.b_i}, {"lstm.b_f", &lstm_.b_f},
                {"lstm.b_o", &lstm_.b_o}, {"lstm.b_g", &lstm_.b_g},
                {"head.weight", &head_w}, {"head.bias", &head_b}};
    }

    LstmForward<T> forward(const BimodalInput<T>& in) const {
        Trace tr = run(in);
        return {std::move(tr.per_step), std::move(tr.averaged)};
    }

    Tensor<T> predict(const BimodalInput<T>& in) const { return run(in).averaged; }

    LossGrads<T> loss_and_grads(const BimodalInput<T>& in, const Tensor<T>& target) const {
        detail::validate_target(target, arch_.outputs, "lstm");
        Trace tr = run(in);
        LossGrads<T> lg;
        lg.loss = mse_loss(tr.averaged, target);

        const int steps = arch_.steps, H = arch_.hidden, Dout = arch_.outputs;
        Tensor<T> davg = mse_backward(tr.averaged, target);

        // Loss attaches to the averaged output; each step inherits 1/steps
        // of the output gradient through the shared head.
        Tensor<T> grad_hidden({steps, H});
        Tensor<T> dhead_w = zeros_like(head_w);
        Tensor<T> dhead_b = zeros_like(head_b);
        const T inv_steps = T(1) / static_cast<T>(steps);
        for (int t = 0; t < steps; ++t) {
            Tensor<T> step_out({Dout});
            for (int j = 0; j < Dout; ++j)
                step_out[j] = tr.per_step[static_cast<size_t>(t) * Dout + j];
            Tensor<T> dstep({Dout});
            for (int j = 0; j < Dout; ++j) dstep[j] = davg[j] * inv_steps;
            Tensor<T> dlogits = sigmoid_backward(step_out, dstep);
            Tensor<T> hidden_t({H});
            for (int k = 0; k < H; ++k)
                hidden_t[k] = tr.lstm.hidden[static_cast<size_t>(t) * H + k];
            LayerGrads<T> g_head = linear_backward(hidden_t, head_w, dlogits);
            for (size_t i = 0; i < dhead_w.numel(); ++i) dhead_w[i] += g_head.params.at("weight")[i];
            for (size_t i = 0; i < dhead_b.numel(); ++i) dhead_b[i] += g_head.params.at("bias")[i];
            for (int k = 0; k < H; ++k)
                grad_hidden[static_cast<size_t>(t) * H + k] = g_head.input[k];
        }

        LayerGrads<T> g_lstm = lstm_backward(tr.steps_in, lstm_, tr.lstm, grad_hidden);

        Tensor<T> dvisual_w = zeros_like(visual_w);
        Tensor<T> dvisual_b = zeros_like(visual_b);
        Tensor<T> daudio_w = zeros_like(audio_w);
        Tensor<T> daudio_b = zeros_like(audio_b);
        Tensor<T> dconv1_w = zeros_like(conv1_w);
        Tensor<T> dconv1_b = zeros_like(conv1_b);
        Tensor<T> dconv2_w = zeros_like(conv2_w);
        Tensor<T> dconv2_b = zeros_like(conv2_b);
        Tensor<T> dconv3_w = zeros_like(conv3_w);
        Tensor<T> dconv3_b = zeros_like(conv3_b);

        const int A = arch_.audio_proj, V = arch_.visual_proj;
        for (int t = 0; t < steps; ++t) {
            const T* dx = g_lstm.input.data.data() + static_cast<size_t>(t) * step_dim();
            Tensor<T> da({A});
            for (int i = 0; i < A; ++i) da[i] = dx[i];
            Tensor<T> dv({V});
            for (int i = 0; i < V; ++i) dv[i] = dx[A + i];

            Tensor<T> audio_row({arch_.audio_dim});
            for (int i = 0; i < arch_.audio_dim; ++i)
                audio_row[i] = in.audio[static_cast<size_t>(t) * arch_.audio_dim + i];
            LayerGrads<T> g_a = linear_backward(audio_row, audio_w, da);
            for (size_t i = 0; i < daudio_w.numel(); ++i) daudio_w[i] += g_a.params.at("weight")[i];
            for (size_t i = 0; i < daudio_b.numel(); ++i) daudio_b[i] += g_a.params.at("bias")[i];

            const FrameTrace& ft = tr.frames[t];
            LayerGrads<T> g_v = linear_backward(ft.flat, visual_w, dv);
            for (size_t i = 0; i < dvisual_w.numel(); ++i) dvisual_w[i] += g_v.params.at("weight")[i];
            for (size_t i = 0; i < dvisual_b.numel(); ++i) dvisual_b[i] += g_v.params.at("bias")[i];

            Tensor<T> dp3(ft.p3.output.shape);
            for (size_t i = 0; i < dp3.numel(); ++i) dp3[i] = g_v.input[i];
            Tensor<T> dr3 = maxpool_backward(ft.a3.shape, ft.p3.argmax, dp3);
            Tensor<T> da3 = relu_backward(ft.a3, dr3);
            LayerGrads<T> g_c3 = conv2d_backward(ft.p2.output, conv3_w, da3, {1, 1});
            Tensor<T> dr2 = maxpool_backward(ft.a2.shape, ft.p2.argmax, g_c3.input);
            Tensor<T> da2 = relu_backward(ft.a2, dr2);
            LayerGrads<T> g_c2 = conv2d_backward(ft.p1.output, conv2_w, da2, {1, 1});
            Tensor<T> dr1 = maxpool_backward(ft.a1.shape, ft.p1.argmax, g_c2.input);
            Tensor<T> da1 = relu_backward(ft.a1, dr1);
            LayerGrads<T> g_c1 = conv2d_backward(in.frames[t], conv1_w, da1, {1, 1});

            for (size_t i = 0; i < dconv1_w.numel(); ++i) dconv1_w[i] += g_c1.params.at("weight")[i];
            for (size_t i = 0; i < dconv1_b.numel(); ++i) dconv1_b[i] += g_c1.params.at("bias")[i];
            for (size_t i = 0; i < dconv2_w.numel(); ++i) dconv2_w[i] += g_c2.params.at("weight")[i];
            for (size_t i = 0; i < dconv2_b.numel(); ++i) dconv2_b[i] += g_c2.params.at("bias")[i];
            for (size_t i = 0; i < dconv3_w.numel(); ++i) dconv3_w[i] += g_c3.params.at("weight")[i];
            for (size_t i = 0; i < dconv3_b.numel(); ++i) dconv3_b[i] += g_c3.params.at("bias")[i];
        }

        lg.grads = {std::move(dconv1_w), std::move(dconv1_b),
                    std::move(dconv2_w), std::move(dconv2_b),
                    std::move(dconv3_w), std::move(dconv3_b),
                    std::move(dvisual_w), std::move(dvisual_b),
                    std::move(daudio_w), std::move(daudio_b),
                    std::move(g_lstm.params.at("W_i")), std::move(g_lstm.params.at("W_f")),
                    std::move(g_lstm.params.at("W_o")), std::move(g_lstm.params.at("W_g")),
                    std::move(g_lstm.params.at("U_i")), std::move(g_lstm.params.at("U_f")),
                    std::move(g_lstm.params.at("U_o")), std::move(g_lstm.params.at("U_g")),
                    std::move(g_lstm.params.at("b_i")), std::move(g_lstm.params.at("b_f")),
                    std::move(g_lstm.params.at("b_o")), std::move(g_lstm.params.at("b_g")),
                    std::move(dhead_w), std::move(dhead_b)};
        return lg;
    }

private:
    struct FrameTrace {
        Tensor<T> a1;
        PoolResult<T> p1;
        Tensor<T> a2;
        PoolResult<T> p2;
        Tensor<T> a3;
        PoolResult<T> p3;
        Tensor<T> flat;
    };

    struct Trace {
        std::vector<FrameTrace> frames;
        Tensor<T> steps_in;  // (steps, audio_proj + visual_proj)
        LstmTrace<T> lstm;
        Tensor<T> per_step;
        Tensor<T> averaged;
    };

    // Per frame: conv -> relu -> pool, three times, flatten, project to 128.
    // Per step: [audio projection | visual projection] feeds the LSTM; the
    // shared head reads every step's hidden state through a sigmoid.
    Trace run(const BimodalInput<T>& in) const {
        detail::validate_bimodal(in, arch_.steps, arch_.in_channels, arch_.image, arch_.audio_dim,
                                 "lstm");
        Trace tr;
        const int steps = arch_.steps;
        tr.steps_in = Tensor<T>({steps, step_dim()});
        tr.frames.reserve(steps);
        for (int t = 0; t < steps; ++t) {
            FrameTrace ft;
            ft.a1 = conv2d_forward(in.frames[t], conv1_w, conv1_b, {1, 1});
            ft.p1 = maxpool2d_forward(relu(ft.a1), {2, 2}, {2, 2});
            ft.a2 = conv2d_forward(ft.p1.output, conv2_w, conv2_b, {1, 1});
            ft.p2 = maxpool2d_forward(relu(ft.a2), {2, 2}, {2, 2});
            ft.a3 = conv2d_forward(ft.p2.output, conv3_w, conv3_b, {1, 1});
            ft.p3 = maxpool2d_forward(relu(ft.a3), {2, 2}, {2, 2});
            ft.flat = Tensor<T>({flatten_dim_}, ft.p3.output.data);
            Tensor<T> vis = linear_forward(ft.flat, visual_w, visual_b);

            Tensor<T> audio_row({arch_.audio_dim});
            for (int i = 0; i < arch_.audio_dim; ++i)
                audio_row[i] = in.audio[static_cast<size_t>(t) * arch_.audio_dim + i];
            Tensor<T> aud = linear_forward(audio_row, audio_w, audio_b);

            T* dst = tr.steps_in.data.data() + static_cast<size_t>(t) * step_dim();
            for (int i = 0; i < arch_.audio_proj; ++i) dst[i] = aud[i];
            for (int i = 0; i < arch_.visual_proj; ++i) dst[arch_.audio_proj + i] = vis[i];
            tr.frames.push_back(std::move(ft));
        }

        tr.lstm = lstm_forward(tr.steps_in, lstm_);

        const int H = arch_.hidden, Dout = arch_.outputs;
        tr.per_step = Tensor<T>({steps, Dout});
        tr.averaged = Tensor<T>({Dout});
        for (int t = 0; t < steps; ++t) {
            Tensor<T> hidden_t({H});
            for (int k = 0; k < H; ++k)
                hidden_t[k] = tr.lstm.hidden[static_cast<size_t>(t) * H + k];
            Tensor<T> y = sigmoid(linear_forward(hidden_t, head_w, head_b));
            for (int j = 0; j < Dout; ++j) {
                tr.per_step[static_cast<size_t>(t) * Dout + j] = y[j];
                tr.averaged[j] += y[j];
            }
        }
        const T inv = T(1) / static_cast<T>(steps);
        for (int j = 0; j < Dout; ++j) tr.averaged[j] *= inv;
        return tr;
    }

    LstmArch arch_;
    int flatten_dim_ = 0;

public:
    Tensor<T> conv1_w, conv1_b, conv2_w, conv2_b, conv3_w, conv3_b;
    Tensor<T> visual_w, visual_b, audio_w, audio_b;
    LstmParams<T> lstm_;
    Tensor<T> head_w, head_b;
};

// ---------------------------------------------------------------------------
// Initialization and the stochastic averaged predictor, shared by both
// architectures.
// ---------------------------------------------------------------------------

// Weights uniform in ±1/sqrt(fan_in), fan_in the product of all non-leading
// dims; biases zero. One generator stream walks tensors() order, so a seed
// pins every parameter.
template <typename T, typename Model>
void init_params(Model& model, uint64_t seed) {
    SplitMix64 rng(seed);
    for (NamedTensor<T> nt : model.tensors()) {
        if (is_bias_param(nt.name)) {
            nt.tensor->fill(T(0));
            continue;
        }
        size_t fan_in = 1;
        for (int d = 1; d < nt.tensor->rank(); ++d) fan_in *= static_cast<size_t>(nt.tensor->dim(d));
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (T& v : nt.tensor->data) v = static_cast<T>(rng.symmetric(bound));
    }
}

// Average of k stochastic forward passes: frames are re-drawn per
// combination, audio features stay fixed for the video.
template <typename T, typename Model>
Tensor<T> predict_stochastic(const Model& model, const std::vector<Tensor<T>>& all_frames,
                             const Tensor<T>& audio_features, int k, uint64_t seed) {
    const FramePartitioning part =
        partition_frames(static_cast<int>(all_frames.size()), model.n_partitions());
    const auto combos = test_combinations(part, k, seed);
    Tensor<T> acc({model.outputs()});
    for (const FrameCombination& combo : combos) {
        BimodalInput<T> in;
        in.frames.reserve(combo.indices.size());
        for (const int idx : combo.indices) in.frames.push_back(all_frames[idx]);
        in.audio = audio_features;
        const Tensor<T> y = model.predict(in);
        for (size_t i = 0; i < acc.numel(); ++i) acc[i] += y[i];
    }
    const T inv = T(1) / static_cast<T>(k);
    for (T& v : acc.data) v *= inv;
    return acc;
}

}  // namespace impress
