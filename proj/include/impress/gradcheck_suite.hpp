#pragma once

#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "impress/gradcheck.hpp"
#include "impress/layers.hpp"
#include "impress/lstm.hpp"
#include "impress/models.hpp"
#include "impress/rng.hpp"
#include "impress/tensor.hpp"

namespace impress {

struct GradCheckCase {
    std::string name;
    GradCheckReport<double> report;
};

namespace detail {

inline void fill_smooth(Tensor<double>& t, SplitMix64& rng, double bound = 1.0) {
    for (double& v : t.data) v = rng.symmetric(bound);
}

// Values with pairwise gaps ~0.01 and no value within 0.002 of zero, so
// central differences never cross a max-pool tie or a relu kink.
inline void fill_spaced(Tensor<double>& t, SplitMix64& rng) {
    const size_t n = t.numel();
    std::vector<size_t> perm(n);
    std::iota(perm.begin(), perm.end(), size_t{0});
    for (size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (size_t i = 0; i < n; ++i) {
        const double base = (static_cast<double>(perm[i]) - static_cast<double>(n / 2)) * 0.01;
        t[i] = base + 0.002 + 0.001 * rng.unit();
    }
}

// Scalar objective: fixed random projection of the layer output.
inline Tensor<double> random_projection(const std::vector<int>& shape, SplitMix64& rng) {
    Tensor<double> w(shape);
    fill_smooth(w, rng);
    return w;
}

inline double dot_all(const Tensor<double>& a, const Tensor<double>& b) {
    double acc = 0;
    for (size_t i = 0; i < a.numel(); ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace detail

// Every layer below gets: analytic gradients from its backward pass, checked
// entry-by-entry against central differences of a scalarized forward pass.
inline std::vector<GradCheckCase> run_layer_gradchecks(int seeds, double eps = 1e-5) {
    std::vector<GradCheckCase> cases;

    auto conv3d_case = [&](uint64_t seed) {
        SplitMix64 rng(seed_combine(0xc3d, seed));
        Tensor<double> x({2, 3, 5, 5}), w({3, 2, 2, 2, 2}), b({3});
        detail::fill_smooth(x, rng);
        detail::fill_smooth(w, rng);
        detail::fill_smooth(b, rng);
        const Stride3 st = (seed % 2) ? Stride3{1, 2, 2} : Stride3{1, 1, 1};
        Tensor<double> proj =
            detail::random_projection(conv3d_forward(x, w, b, st).shape, rng);
        auto loss = [&] { return detail::dot_all(conv3d_forward(x, w, b, st), proj); };
        LayerGrads<double> g = conv3d_backward(x, w, proj, st);
        GradCheckReport<double> rep;
        gradcheck_tensor<double>(w, g.params.at("weight"), loss, eps, "conv3d.weight", rep);
        gradcheck_tensor<double>(b, g.params.at("bias"), loss, eps, "conv3d.bias", rep);
        gradcheck_tensor<double>(x, g.input, loss, eps, "conv3d.input", rep);
        return rep;
    };

    auto conv2d_case = [&](uint64_t seed) {
        SplitMix64 rng(seed_combine(0xc2d, seed));
        Tensor<double> x({2, 6, 6}), w({3, 2, 3, 3}), b({3});
        detail::fill_smooth(x, rng);
        detail::fill_smooth(w, rng);
        detail::fill_smooth(b, rng);
        const Stride2 st = (seed % 2) ? Stride2{3, 3} : Stride2{1, 1};
        Tensor<double> proj =
            detail::random_projection(conv2d_forward(x, w, b, st).shape, rng);
        auto loss = [&] { return detail::dot_all(conv2d_forward(x, w, b, st), proj); };
        LayerGrads<double> g = conv2d_backward(x, w, proj, st);
        GradCheckReport<double> rep;
        gradcheck_tensor<double>(w, g.params.at("weight"), loss, eps, "conv2d.weight", rep);
        gradcheck_tensor<double>(b, g.params.at("bias"), loss, eps, "conv2d.bias", rep);
        gradcheck_tensor<double>(x, g.input, loss, eps, "conv2d.input", rep);
        return rep;
    };

    auto pool3d_case = [&](uint64_t seed) {
        SplitMix64 rng(seed_combine(0x93d, seed));
        Tensor<double> x({2, 4, 6, 6});
        detail::fill_spaced(x, rng);
        const Window3 win{2, 2, 2};
        const Stride3 st{2, 2, 2};
        Tensor<double> proj =
            detail::random_projection(maxpool3d_forward(x, win, st).output.shape, rng);
        auto loss = [&] { return detail::dot_all(maxpool3d_forward(x, win, st).output, proj); };
        PoolResult<double> fwd = maxpool3d_forward(x, win, st);
        Tensor<double> din = maxpool_backward(x.shape, fwd.argmax, proj);
        GradCheckReport<double> rep;
        gradcheck_tensor<double>(x, din, loss, eps, "maxpool3d.input", rep);
        return rep;
    };

    auto pool2d_case = [&](uint64_t seed) {
        SplitMix64 rng(seed_combine(0x92d, seed));
        Tensor<double> x({3, 8, 8});
        detail::fill_spaced(x, rng);
        const Window2 win{2, 2};
        const Stride2 st{2, 2};
        Tensor<double> proj =
            detail::random_projection(maxpool2d_forward(x, win, st).output.shape, rng);
        auto loss = [&] { return detail::dot_all(maxpool2d_forward(x, win, st).output, proj); };
        PoolResult<double> fwd = maxpool2d_forward(x, win, st);
        Tensor<double> din = maxpool_backward(x.shape, fwd.argmax, proj);
        GradCheckReport<double> rep;
        gradcheck_tensor<double>(x, din, loss, eps, "maxpool2d.input", rep);
        return rep;
    };

    auto linear_case = [&](uint64_t seed) {
        SplitMix64 rng(seed_combine(0x11e, seed));
        Tensor<double> x({7}), w({4, 7}), b({4});
        detail::fill_smooth(x, rng);
        detail::fill_smooth(w, rng);
        detail::fill_smooth(b, rng);
        Tensor<double> proj = detail::random_projection({4}, rng);
        auto loss = [&] { return detail::dot_all(linear_forward(x, w, b), proj); };
        LayerGrads<double> g = linear_backward(x, w, proj);
        GradCheckReport<double> rep;
        gradcheck_tensor<double>(w, g.params.at("weight"), loss, eps, "linear.weight", rep);
        gradcheck_tensor<double>(b, g.params.at("bias"), loss, eps, "linear.bias", rep);
        gradcheck_tensor<double>(x, g.input, loss, eps, "linear.input", rep);
        return rep;
    };

    auto relu_case = [&](uint64_t seed) {
        SplitMix64 rng(seed_combine(0x7e1, seed));
        Tensor<double> x({40});
        detail::fill_spaced(x, rng);
        Tensor<double> proj = detail::random_projection({40}, rng);
        auto loss = [&] { return detail::dot_all(relu(x), proj); };
        Tensor<double> din = relu_backward(x, proj);
        GradCheckReport<double> rep;
        gradcheck_tensor<double>(x, din, loss, eps, "relu.input", rep);
        return rep;
    };

    auto sigmoid_case = [&](uint64_t seed) {
        SplitMix64 rng(seed_combine(0x516, seed));
        Tensor<double> x({40});
        detail::fill_smooth(x, rng, 3.0);
        Tensor<double> proj = detail::random_projection({40}, rng);
        auto loss = [&] { return detail::dot_all(sigmoid(x), proj); };
        Tensor<double> din = sigmoid_backward(sigmoid(x), proj);
        GradCheckReport<double> rep;
        gradcheck_tensor<double>(x, din, loss, eps, "sigmoid.input", rep);
        return rep;
    };

    auto mse_case = [&](uint64_t seed) {
        SplitMix64 rng(seed_combine(0x53e, seed));
        Tensor<double> p({9}), t({9});
        detail::fill_smooth(p, rng);
        detail::fill_smooth(t, rng);
        auto loss = [&] { return mse_loss(p, t); };
        Tensor<double> din = mse_backward(p, t);
        GradCheckReport<double> rep;
        gradcheck_tensor<double>(p, din, loss, eps, "mse.pred", rep);
        return rep;
    };

    auto lstm_case = [&](uint64_t seed) {
        SplitMix64 rng(seed_combine(0x157, seed));
        LstmParams<double> p(3, 5);
        Tensor<double> x({4, 3});
        detail::fill_smooth(x, rng);
        std::vector<NamedTensor<double>> params = {
            {"W_i", &p.W_i}, {"W_f", &p.W_f}, {"W_o", &p.W_o}, {"W_g", &p.W_g},
            {"U_i", &p.U_i}, {"U_f", &p.U_f}, {"U_o", &p.U_o}, {"U_g", &p.U_g},
            {"b_i", &p.b_i}, {"b_f", &p.b_f}, {"b_o", &p.b_o}, {"b_g", &p.b_g}};
        for (auto& nt : params) detail::fill_smooth(*nt.tensor, rng, 0.5);
        Tensor<double> proj = detail::random_projection({4, 5}, rng);
        auto loss = [&] { return detail::dot_all(lstm_forward(x, p).hidden, proj); };
        LayerGrads<double> g = lstm_backward(x, p, lstm_forward(x, p), proj);
        GradCheckReport<double> rep;
        for (auto& nt : params)
            gradcheck_tensor<double>(*nt.tensor, g.params.at(nt.name), loss, eps,
                                     "lstm." + nt.name, rep);
        gradcheck_tensor<double>(x, g.input, loss, eps, "lstm.input", rep);
        return rep;
    };

    struct Entry {
        const char* name;
        std::function<GradCheckReport<double>(uint64_t)> fn;
    };
    const std::vector<Entry> table = {
        {"conv3d", conv3d_case}, {"conv2d", conv2d_case},   {"maxpool3d", pool3d_case},
        {"maxpool2d", pool2d_case}, {"linear", linear_case}, {"relu", relu_case},
        {"sigmoid", sigmoid_case},  {"mse", mse_case},       {"lstm_bptt", lstm_case}};
    for (const Entry& e : table) {
        GradCheckCase c{e.name, {}};
        for (int s = 0; s < seeds; ++s) {
            const GradCheckReport<double> rep = e.fn(static_cast<uint64_t>(s));
            c.report.checked += rep.checked;
            if (rep.max_rel_error > c.report.max_rel_error) {
                c.report.max_rel_error = rep.max_rel_error;
                c.report.worst_param = rep.worst_param;
                c.report.worst_index = rep.worst_index;
                c.report.worst_analytic = rep.worst_analytic;
                c.report.worst_numeric = rep.worst_numeric;
            }
        }
        cases.push_back(std::move(c));
    }
    return cases;
}

// End-to-end check of a downsized model: every parameter of every tensor is
// perturbed and compared against the analytic gradient of the training loss.
template <typename Model>
GradCheckCase run_model_gradcheck(const std::string& name, Model& model, int seeds,
                                  double eps = 1e-5, double refine_tol = 1e-4) {
    GradCheckCase c{name, {}};
    for (int s = 0; s < seeds; ++s) {
        SplitMix64 rng(seed_combine(0xe2e, static_cast<uint64_t>(s)));
        init_params<double>(model, rng.next());

        BimodalInput<double> in;
        const int n = model.n_partitions();
        in.frames.reserve(n);
        for (int f = 0; f < n; ++f) {
            Tensor<double> frame({3, model.image_size(), model.image_size()});
            // Pixel-like inputs with pool-safe spacing.
            detail::fill_spaced(frame, rng);
            in.frames.push_back(std::move(frame));
        }
        in.audio = Tensor<double>({n, model.audio_dim()});
        detail::fill_smooth(in.audio, rng);
        Tensor<double> target({model.outputs()});
        for (double& v : target.data) v = rng.unit();

        LossGrads<double> lg = model.loss_and_grads(in, target);
        auto loss = [&] { return model.loss_and_grads(in, target).loss; };
        auto tensors = model.tensors();
        for (size_t i = 0; i < tensors.size(); ++i)
            gradcheck_tensor<double>(*tensors[i].tensor, lg.grads[i], loss, eps,
                                     name + "." + tensors[i].name, c.report, /*stride=*/1,
                                     refine_tol);
    }
    return c;
}

}  // namespace impress
