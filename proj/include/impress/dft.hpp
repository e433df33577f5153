#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace impress {

namespace detail {

constexpr bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline int next_pow2(int n) {
    int m = 1;
    while (m < n) m <<= 1;
    return m;
}

// In-place iterative radix-2 transform with precomputed bit-reversal
// permutation and twiddle table.
template <typename T>
struct Radix2Plan {
    int n = 0;
    std::vector<int> bitrev;
    std::vector<std::complex<T>> twiddle;  // exp(-2*pi*i*j/n), j in [0, n/2)

    explicit Radix2Plan(int size) : n(size) {
        if (!is_pow2(n)) throw std::invalid_argument("Radix2Plan: size must be a power of two");
        bitrev.resize(n);
        int bits = 0;
        while ((1 << bits) < n) ++bits;
        for (int i = 0; i < n; ++i) {
            int r = 0;
            for (int b = 0; b < bits; ++b)
                if (i & (1 << b)) r |= 1 << (bits - 1 - b);
            bitrev[i] = r;
        }
        twiddle.resize(n / 2);
        for (int j = 0; j < n / 2; ++j) {
            const double a = -2.0 * M_PI * j / n;
            twiddle[j] = std::complex<T>(static_cast<T>(std::cos(a)), static_cast<T>(std::sin(a)));
        }
    }

    void forward(std::vector<std::complex<T>>& a) const {
        for (int i = 0; i < n; ++i)
            if (bitrev[i] > i) std::swap(a[i], a[bitrev[i]]);
        for (int len = 2; len <= n; len <<= 1) {
            const int half = len / 2;
            const int stride = n / len;
            for (int start = 0; start < n; start += len)
                for (int j = 0; j < half; ++j) {
                    const std::complex<T> w = twiddle[j * stride];
                    const std::complex<T> u = a[start + j];
                    const std::complex<T> v = a[start + j + half] * w;
                    a[start + j] = u + v;
                    a[start + j + half] = u - v;
                }
        }
    }

    // inverse = conj(forward(conj(x))) / n
    void inverse(std::vector<std::complex<T>>& a) const {
        for (auto& v : a) v = std::conj(v);
        forward(a);
        const T inv = T(1) / static_cast<T>(n);
        for (auto& v : a) v = std::conj(v) * inv;
    }
};

}  // namespace detail

// Discrete Fourier transform plan for one fixed length. Powers of two run
// straight radix-2; other lengths go through the chirp-z reformulation,
// which turns a length-n DFT into three power-of-two transforms.
template <typename T>
class Dft {
public:
    explicit Dft(int n) : n_(n) {
        if (n < 1) throw std::invalid_argument("Dft: length must be >= 1");
        if (detail::is_pow2(n_)) {
            plan_ = std::make_unique<detail::Radix2Plan<T>>(n_);
            return;
        }
        m_ = detail::next_pow2(2 * n_ - 1);
        plan_ = std::make_unique<detail::Radix2Plan<T>>(m_);
        chirp_.resize(n_);
        // exp(-i*pi*k^2/n); k^2 is reduced mod 2n, the phase period.
        for (int k = 0; k < n_; ++k) {
            const uint64_t k2 = (static_cast<uint64_t>(k) * k) % (2ull * n_);
            const double a = -M_PI * static_cast<double>(k2) / n_;
            chirp_[k] = std::complex<T>(static_cast<T>(std::cos(a)), static_cast<T>(std::sin(a)));
        }
        std::vector<std::complex<T>> b(m_, std::complex<T>(0, 0));
        b[0] = std::conj(chirp_[0]);
        for (int k = 1; k < n_; ++k) {
            b[k] = std::conj(chirp_[k]);
            b[m_ - k] = std::conj(chirp_[k]);
        }
        plan_->forward(b);
        chirp_fft_ = std::move(b);
    }

    int size() const { return n_; }

    // Full complex transform of a real frame: X_k = sum_j x_j exp(-2*pi*i*jk/n).
    std::vector<std::complex<T>> transform(const std::vector<T>& x) const {
        if (static_cast<int>(x.size()) != n_)
            throw std::invalid_argument("Dft: frame length " + std::to_string(x.size()) +
                                        " does not match plan length " + std::to_string(n_));
        if (m_ == 0) {
            std::vector<std::complex<T>> a(n_);
            for (int i = 0; i < n_; ++i) a[i] = std::complex<T>(x[i], T(0));
            plan_->forward(a);
            return a;
        }
        std::vector<std::complex<T>> a(m_, std::complex<T>(0, 0));
        for (int i = 0; i < n_; ++i) a[i] = chirp_[i] * x[i];
        plan_->forward(a);
        for (int i = 0; i < m_; ++i) a[i] *= chirp_fft_[i];
        plan_->inverse(a);
        std::vector<std::complex<T>> out(n_);
        for (int k = 0; k < n_; ++k) out[k] = chirp_[k] * a[k];
        return out;
    }

    // Magnitudes of the first floor(n/2) bins, the shape every spectral
    // feature consumes.
    std::vector<T> magnitudes(const std::vector<T>& x) const {
        const auto full = transform(x);
        std::vector<T> mag(n_ / 2);
        for (int k = 0; k < n_ / 2; ++k) mag[k] = std::abs(full[k]);
        return mag;
    }

private:
    int n_;
    int m_ = 0;  // 0 when the direct radix-2 path applies
    std::unique_ptr<detail::Radix2Plan<T>> plan_;
    std::vector<std::complex<T>> chirp_;
    std::vector<std::complex<T>> chirp_fft_;
};

}  // namespace impress
