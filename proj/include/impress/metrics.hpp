#pragma once

#include <array>
#include <cmath>
#include <string>

#include "impress/tensor.hpp"

namespace impress {

inline constexpr int kTraitCount = 5;

struct MetricReport {
    std::array<double, kTraitCount> average_accuracy{};
    double mean_average_accuracy = 0.0;
    int videos = 0;
};

namespace detail {

template <typename T>
void validate_metric_inputs(const Tensor<T>& targets, const Tensor<T>& predictions) {
    if (targets.rank() != 2 || predictions.rank() != 2)
        throw std::invalid_argument("metrics: inputs must be rank-2 (videos x traits)");
    require_same_shape(targets, predictions, "metrics");
    if (targets.dim(0) < 1) throw std::invalid_argument("metrics: need at least one video");
    for (const T v : targets.data)
        if (!(v >= T(0) && v <= T(1)))
            throw std::invalid_argument("metrics: target value outside [0,1]");
    for (const T v : predictions.data)
        if (!(v >= T(0) && v <= T(1)))
            throw std::invalid_argument("metrics: prediction value outside [0,1]");
}

}  // namespace detail

// Per-trait mean of (1 - |target - prediction|) over videos.
template <typename T>
double average_accuracy(const Tensor<T>& targets, const Tensor<T>& predictions, int trait) {
    detail::validate_metric_inputs(targets, predictions);
    if (trait < 0 || trait >= targets.dim(1))
        throw std::invalid_argument("metrics: trait index " + std::to_string(trait) +
                                    " out of range");
    const int n = targets.dim(0), m = targets.dim(1);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const size_t idx = static_cast<size_t>(i) * m + trait;
        acc += 1.0 - std::abs(static_cast<double>(targets[idx]) -
                              static_cast<double>(predictions[idx]));
    }
    return acc / n;
}

// The five per-trait accuracies and their arithmetic mean.
template <typename T>
MetricReport mean_average_accuracy(const Tensor<T>& targets, const Tensor<T>& predictions) {
    detail::validate_metric_inputs(targets, predictions);
    if (targets.dim(1) != kTraitCount)
        throw std::invalid_argument("metrics: expected " + std::to_string(kTraitCount) +
                                    " traits, got " + std::to_string(targets.dim(1)));
    MetricReport r;
    r.videos = targets.dim(0);
    double total = 0.0;
    for (int j = 0; j < kTraitCount; ++j) {
        r.average_accuracy[j] = average_accuracy(targets, predictions, j);
        total += r.average_accuracy[j];
    }
    r.mean_average_accuracy = total / kTraitCount;
    return r;
}

}  // namespace impress
