#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace impress {

inline std::string shape_str(const std::vector<int>& shape) {
    std::string s = "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

// Dense row-major n-d array; the single numeric currency of the pipeline.
// T is float in training mode and double in verification mode.
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> data;

    Tensor() = default;

    explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(checked_numel(shape), T(0)) {}

    Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (checked_numel(shape) != data.size())
            throw std::invalid_argument("tensor: shape " + shape_str(shape) + " wants " +
                                        std::to_string(checked_numel(shape)) + " values, got " +
                                        std::to_string(data.size()));
    }

    static size_t checked_numel(const std::vector<int>& s) {
        size_t n = 1;
        for (int e : s) {
            if (e < 1)
                throw std::invalid_argument("tensor: extent must be >= 1, got " + std::to_string(e) +
                                            " in shape " + shape_str(s));
            n *= static_cast<size_t>(e);
        }
        return n;
    }

    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    size_t numel() const { return data.size(); }

    T& operator[](size_t i) { return data[i]; }
    const T& operator[](size_t i) const { return data[i]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void fill(T v) {
        for (T& x : data) x = v;
    }
};

template <typename T>
Tensor<T> zeros_like(const Tensor<T>& t) {
    return Tensor<T>(t.shape);
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_str(a.shape) +
                                    " vs " + shape_str(b.shape));
}

}  // namespace impress
