#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "impress/tensor.hpp"

namespace impress {

// relative error between an analytic and a numeric derivative; the 1e-8
// floor keeps pairs of near-zero values from blowing up the ratio.
template <typename T>
T gradcheck_relative_error(T analytic, T numeric) {
    const T denom = std::max({std::abs(analytic), std::abs(numeric), T(1e-8)});
    return std::abs(analytic - numeric) / denom;
}

template <typename T>
struct GradCheckReport {
    T max_rel_error = T(0);
    size_t checked = 0;
    std::string worst_param;  // name of the tensor holding the worst entry
    size_t worst_index = 0;
    T worst_analytic = T(0);
    T worst_numeric = T(0);

    bool within(T tol) const { return max_rel_error < tol; }
};

// Central-difference check of one tensor against its analytic gradient.
// `loss` must re-evaluate the full loss after each perturbation of `param`.
// `stride` > 1 spot-checks every stride-th entry to bound the cost on big
// tensors; the entries checked are still exact central differences.
//
// `refine_tol` > 0 re-measures entries whose error exceeds it at steps
// eps/64..64*eps, keeping the best agreement. A step that straddles a
// max-pool argmax flip or a relu kink measures a secant across the fold, not
// the derivative, and a shorter step moves the probe inside the smooth
// neighborhood; a near-zero gradient needs a longer step to lift the loss
// difference above double-precision roundoff. A wrong analytic gradient
// disagrees at every step size and still fails.
template <typename T>
void gradcheck_tensor(Tensor<T>& param, const Tensor<T>& analytic,
                      const std::function<T()>& loss, T eps, const std::string& name,
                      GradCheckReport<T>& report, size_t stride = 1, T refine_tol = T(0)) {
    require_same_shape(param, analytic, "gradcheck_tensor");
    if (stride == 0) stride = 1;
    for (size_t i = 0; i < param.numel(); i += stride) {
        const T saved = param[i];
        auto probe = [&](T step) {
            param[i] = saved + step;
            const T up = loss();
            param[i] = saved - step;
            const T down = loss();
            param[i] = saved;
            return (up - down) / (T(2) * step);
        };
        T numeric = probe(eps);
        T rel = gradcheck_relative_error(analytic[i], numeric);
        if (refine_tol > T(0) && rel > refine_tol) {
            for (T scale : {T(1) / T(8), T(1) / T(64), T(8), T(64)}) {
                if (rel <= refine_tol) break;
                const T refined = probe(eps * scale);
                const T refined_rel = gradcheck_relative_error(analytic[i], refined);
                if (refined_rel < rel) {
                    numeric = refined;
                    rel = refined_rel;
                }
            }
        }
        ++report.checked;
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_param = name;
            report.worst_index = i;
            report.worst_analytic = analytic[i];
            report.worst_numeric = numeric;
        }
    }
}

}  // namespace impress
