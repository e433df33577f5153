#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "impress/models.hpp"
#include "impress/tensor.hpp"

namespace impress {

struct SgdConfig {
    double learning_rate = 0.05;
    double weight_decay = 5e-4;
    double momentum = 0.9;
    double lr_decay = 1e-4;
    bool decay_biases = true;  // framework-default: weight decay hits biases too
};

// SGD with momentum, L2 weight decay folded into the gradient, and a
// hyperbolic learning-rate schedule stepped once per batch:
//   effective_lr = lr / (1 + step * lr_decay)
//   g' = g + weight_decay * w
//   v  = momentum * v + g'
//   w  = w - effective_lr * v
template <typename T>
class Sgd {
public:
    Sgd(SgdConfig cfg, const std::vector<NamedTensor<T>>& params) : cfg_(cfg) {
        if (cfg.learning_rate <= 0 || cfg.momentum < 0 || cfg.weight_decay < 0 || cfg.lr_decay < 0)
            throw std::invalid_argument("sgd: rates must be non-negative, learning rate positive");
        velocity_.reserve(params.size());
        is_bias_.reserve(params.size());
        for (const NamedTensor<T>& nt : params) {
            velocity_.push_back(zeros_like(*nt.tensor));
            is_bias_.push_back(is_bias_param(nt.name));
        }
    }

    uint64_t steps() const { return step_; }

    double effective_lr() const {
        return cfg_.learning_rate / (1.0 + static_cast<double>(step_) * cfg_.lr_decay);
    }

    void step(const std::vector<NamedTensor<T>>& params, const std::vector<Tensor<T>>& grads) {
        if (params.size() != velocity_.size() || grads.size() != velocity_.size())
            throw std::invalid_argument("sgd: parameter/gradient count mismatch");
        const T lr = static_cast<T>(effective_lr());
        const T mu = static_cast<T>(cfg_.momentum);
        for (size_t i = 0; i < params.size(); ++i) {
            Tensor<T>& w = *params[i].tensor;
            const Tensor<T>& g = grads[i];
            Tensor<T>& v = velocity_[i];
            require_same_shape(w, g, "sgd");
            const T wd = (is_bias_[i] && !cfg_.decay_biases) ? T(0) : static_cast<T>(cfg_.weight_decay);
            for (size_t k = 0; k < w.numel(); ++k) {
                const T adjusted = g[k] + wd * w[k];
                v[k] = mu * v[k] + adjusted;
                w[k] -= lr * v[k];
            }
        }
        ++step_;
    }

private:
    SgdConfig cfg_;
    std::vector<Tensor<T>> velocity_;
    std::vector<bool> is_bias_;
    uint64_t step_ = 0;
};

}  // namespace impress
