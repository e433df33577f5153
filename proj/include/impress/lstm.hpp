#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "impress/layers.hpp"
#include "impress/tensor.hpp"

namespace impress {

// Single-layer LSTM, no peephole connections, zero initial hidden and cell
// state. Gate order everywhere is i, f, o, g (g is the tanh candidate).
template <typename T>
struct LstmParams {
    Tensor<T> W_i, W_f, W_o, W_g;  // each (H, D)
    Tensor<T> U_i, U_f, U_o, U_g;  // each (H, H)
    Tensor<T> b_i, b_f, b_o, b_g;  // each (H)

    LstmParams(int input_dim, int hidden_dim)
        : W_i({hidden_dim, input_dim}),
          W_f({hidden_dim, input_dim}),
          W_o({hidden_dim, input_dim}),
          W_g({hidden_dim, input_dim}),
          U_i({hidden_dim, hidden_dim}),
          U_f({hidden_dim, hidden_dim}),
          U_o({hidden_dim, hidden_dim}),
          U_g({hidden_dim, hidden_dim}),
          b_i({hidden_dim}),
          b_f({hidden_dim}),
          b_o({hidden_dim}),
          b_g({hidden_dim}) {}

    int input_dim() const { return W_i.dim(1); }
    int hidden_dim() const { return W_i.dim(0); }
};

// Forward pass cache: everything the backward pass reads.
template <typename T>
struct LstmTrace {
    Tensor<T> hidden;                       // (T, H)
    std::vector<std::vector<T>> i, f, o, g;  // gate activations per step
    std::vector<std::vector<T>> c, tanh_c;   // cell state and its tanh per step
};

namespace detail {

// y += M . x for an (R, C) row-major matrix.
template <typename T>
void matvec_add(const Tensor<T>& m, const T* x, T* y) {
    const int R = m.dim(0), C = m.dim(1);
    for (int r = 0; r < R; ++r) {
        const T* row = m.data.data() + static_cast<size_t>(r) * C;
        T acc = T(0);
        for (int c = 0; c < C; ++c) acc += row[c] * x[c];
        y[r] += acc;
    }
}

// y += M^T . x for an (R, C) row-major matrix; x has R entries, y has C.
template <typename T>
void matvec_t_add(const Tensor<T>& m, const T* x, T* y) {
    const int R = m.dim(0), C = m.dim(1);
    for (int r = 0; r < R; ++r) {
        const T* row = m.data.data() + static_cast<size_t>(r) * C;
        const T xv = x[r];
        for (int c = 0; c < C; ++c) y[c] += row[c] * xv;
    }
}

// M += a ⊗ b (outer product), M is (R, C).
template <typename T>
void outer_add(Tensor<T>& m, const T* a, const T* b) {
    const int R = m.dim(0), C = m.dim(1);
    for (int r = 0; r < R; ++r) {
        T* row = m.data.data() + static_cast<size_t>(r) * C;
        const T av = a[r];
        for (int c = 0; c < C; ++c) row[c] += av * b[c];
    }
}

}  // namespace detail

template <typename T>
LstmTrace<T> lstm_forward(const Tensor<T>& input, const LstmParams<T>& p) {
    detail::require_rank(input.shape, 2, "lstm", "input");
    const int steps = input.dim(0), D = input.dim(1), H = p.hidden_dim();
    if (D != p.input_dim())
        throw std::invalid_argument("lstm: input feature axis has " + std::to_string(D) +
                                    " entries, weights expect " + std::to_string(p.input_dim()));

    LstmTrace<T> tr;
    tr.hidden = Tensor<T>({steps, H});
    tr.i.assign(steps, std::vector<T>(H));
    tr.f.assign(steps, std::vector<T>(H));
    tr.o.assign(steps, std::vector<T>(H));
    tr.g.assign(steps, std::vector<T>(H));
    tr.c.assign(steps, std::vector<T>(H));
    tr.tanh_c.assign(steps, std::vector<T>(H));

    std::vector<T> h_prev(H, T(0)), c_prev(H, T(0));
    std::vector<T> a_i(H), a_f(H), a_o(H), a_g(H);

    for (int t = 0; t < steps; ++t) {
        const T* x = input.data.data() + static_cast<size_t>(t) * D;
        for (int k = 0; k < H; ++k) {
            a_i[k] = p.b_i[static_cast<size_t>(k)];
            a_f[k] = p.b_f[static_cast<size_t>(k)];
            a_o[k] = p.b_o[static_cast<size_t>(k)];
            a_g[k] = p.b_g[static_cast<size_t>(k)];
        }
        detail::matvec_add(p.W_i, x, a_i.data());
        detail::matvec_add(p.W_f, x, a_f.data());
        detail::matvec_add(p.W_o, x, a_o.data());
        detail::matvec_add(p.W_g, x, a_g.data());
        detail::matvec_add(p.U_i, h_prev.data(), a_i.data());
        detail::matvec_add(p.U_f, h_prev.data(), a_f.data());
        detail::matvec_add(p.U_o, h_prev.data(), a_o.data());
        detail::matvec_add(p.U_g, h_prev.data(), a_g.data());

        T* h = tr.hidden.data.data() + static_cast<size_t>(t) * H;
        for (int k = 0; k < H; ++k) {
            const T iv = sigmoid_scalar(a_i[k]);
            const T fv = sigmoid_scalar(a_f[k]);
            const T ov = sigmoid_scalar(a_o[k]);
            const T gv = std::tanh(a_g[k]);
            const T cv = fv * c_prev[k] + iv * gv;
            const T tc = std::tanh(cv);
            tr.i[t][k] = iv;
            tr.f[t][k] = fv;
            tr.o[t][k] = ov;
            tr.g[t][k] = gv;
            tr.c[t][k] = cv;
            tr.tanh_c[t][k] = tc;
            h[k] = ov * tc;
        }
        c_prev = tr.c[t];
        for (int k = 0; k < H; ++k) h_prev[k] = h[k];
    }
    return tr;
}

// grad_hidden is (T, H): the loss gradient of every step's hidden output.
// Returns gradients for all twelve parameter tensors plus the input.
template <typename T>
LayerGrads<T> lstm_backward(const Tensor<T>& input, const LstmParams<T>& p,
                            const LstmTrace<T>& tr, const Tensor<T>& grad_hidden) {
    require_same_shape(tr.hidden, grad_hidden, "lstm_backward");
    const int steps = input.dim(0), D = input.dim(1), H = p.hidden_dim();

    LayerGrads<T> g;
    g.params.emplace("W_i", zeros_like(p.W_i));
    g.params.emplace("W_f", zeros_like(p.W_f));
    g.params.emplace("W_o", zeros_like(p.W_o));
    g.params.emplace("W_g", zeros_like(p.W_g));
    g.params.emplace("U_i", zeros_like(p.U_i));
    g.params.emplace("U_f", zeros_like(p.U_f));
    g.params.emplace("U_o", zeros_like(p.U_o));
    g.params.emplace("U_g", zeros_like(p.U_g));
    g.params.emplace("b_i", zeros_like(p.b_i));
    g.params.emplace("b_f", zeros_like(p.b_f));
    g.params.emplace("b_o", zeros_like(p.b_o));
    g.params.emplace("b_g", zeros_like(p.b_g));
    g.input = zeros_like(input);

    std::vector<T> dh_next(H, T(0)), dc_next(H, T(0));
    std::vector<T> dh(H), dc(H), da_i(H), da_f(H), da_o(H), da_g(H);
    const std::vector<T> zero_state(H, T(0));

    for (int t = steps - 1; t >= 0; --t) {
        const T* ghid = grad_hidden.data.data() + static_cast<size_t>(t) * H;
        const T* x = input.data.data() + static_cast<size_t>(t) * D;
        const T* c_prev = (t > 0) ? tr.c[t - 1].data() : zero_state.data();
        const T* h_prev = (t > 0) ? tr.hidden.data.data() + static_cast<size_t>(t - 1) * H : nullptr;

        for (int k = 0; k < H; ++k) {
            dh[k] = ghid[k] + dh_next[k];
            const T iv = tr.i[t][k], fv = tr.f[t][k], ov = tr.o[t][k], gv = tr.g[t][k];
            const T tc = tr.tanh_c[t][k];
            da_o[k] = dh[k] * tc * ov * (T(1) - ov);
            dc[k] = dc_next[k] + dh[k] * ov * (T(1) - tc * tc);
            da_i[k] = dc[k] * gv * iv * (T(1) - iv);
            da_f[k] = dc[k] * c_prev[k] * fv * (T(1) - fv);
            da_g[k] = dc[k] * iv * (T(1) - gv * gv);
            dc_next[k] = dc[k] * fv;
        }

        detail::outer_add(g.params.at("W_i"), da_i.data(), x);
        detail::outer_add(g.params.at("W_f"), da_f.data(), x);
        detail::outer_add(g.params.at("W_o"), da_o.data(), x);
        detail::outer_add(g.params.at("W_g"), da_g.data(), x);
        if (h_prev) {
            detail::outer_add(g.params.at("U_i"), da_i.data(), h_prev);
            detail::outer_add(g.params.at("U_f"), da_f.data(), h_prev);
            detail::outer_add(g.params.at("U_o"), da_o.data(), h_prev);
            detail::outer_add(g.params.at("U_g"), da_g.data(), h_prev);
        }
        for (int k = 0; k < H; ++k) {
            g.params.at("b_i")[static_cast<size_t>(k)] += da_i[k];
            g.params.at("b_f")[static_cast<size_t>(k)] += da_f[k];
            g.params.at("b_o")[static_cast<size_t>(k)] += da_o[k];
            g.params.at("b_g")[static_cast<size_t>(k)] += da_g[k];
        }

        T* dx = g.input.data.data() + static_cast<size_t>(t) * D;
        detail::matvec_t_add(p.W_i, da_i.data(), dx);
        detail::matvec_t_add(p.W_f, da_f.data(), dx);
        detail::matvec_t_add(p.W_o, da_o.data(), dx);
        detail::matvec_t_add(p.W_g, da_g.data(), dx);

        std::fill(dh_next.begin(), dh_next.end(), T(0));
        detail::matvec_t_add(p.U_i, da_i.data(), dh_next.data());
        detail::matvec_t_add(p.U_f, da_f.data(), dh_next.data());
        detail::matvec_t_add(p.U_o, da_o.data(), dh_next.data());
        detail::matvec_t_add(p.U_g, da_g.data(), dh_next.data());
    }
    return g;
}

}  // namespace impress
