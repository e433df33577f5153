#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "impress/dft.hpp"
#include "impress/errors.hpp"
#include "impress/tensor.hpp"
#include "impress/wav.hpp"

namespace impress {

inline constexpr int kShortTermFeatureCount = 34;
inline constexpr int kPartitionFeatureWidth = 2 * kShortTermFeatureCount;

// ---------------------------------------------------------------------------
// Clip partitioning and framing.
// ---------------------------------------------------------------------------

// First n-1 partitions get floor(len/n) samples, the last takes the rest.
template <typename T>
std::vector<AudioClip<T>> partition_audio(const AudioClip<T>& clip, int n) {
    if (n < 1) throw std::invalid_argument("partition_audio: need n >= 1");
    const size_t len = clip.samples.size();
    if (len < static_cast<size_t>(n))
        throw DataFormatError("partition_audio: clip of " + std::to_string(len) +
                              " samples cannot be split into " + std::to_string(n) + " partitions");
    const size_t base = len / n;
    std::vector<AudioClip<T>> parts;
    parts.reserve(n);
    size_t off = 0;
    for (int i = 0; i < n; ++i) {
        const size_t take = (i == n - 1) ? len - off : base;
        AudioClip<T> p;
        p.sample_rate = clip.sample_rate;
        p.samples.assign(clip.samples.begin() + off, clip.samples.begin() + off + take);
        parts.push_back(std::move(p));
        off += take;
    }
    return parts;
}

// Frames of round(window_s*rate) samples every round(step_s*rate) samples.
// Trailing samples that cannot fill a window are dropped.
template <typename T>
std::vector<std::vector<T>> frame_signal(const AudioClip<T>& clip, double window_s, double step_s) {
    if (window_s <= 0 || step_s <= 0)
        throw std::invalid_argument("frame_signal: window and step must be positive");
    const size_t win = static_cast<size_t>(std::lround(window_s * clip.sample_rate));
    const size_t step = static_cast<size_t>(std::lround(step_s * clip.sample_rate));
    if (win == 0 || step == 0)
        throw std::invalid_argument("frame_signal: window and step must round to >= 1 sample");
    std::vector<std::vector<T>> frames;
    if (clip.samples.size() < win) return frames;
    for (size_t off = 0; off + win <= clip.samples.size(); off += step)
        frames.emplace_back(clip.samples.begin() + off, clip.samples.begin() + off + win);
    return frames;
}

// ---------------------------------------------------------------------------
// Time-domain frame features.
// ---------------------------------------------------------------------------

template <typename T>
T zcr(const std::vector<T>& frame) {
    if (frame.size() < 2) throw std::invalid_argument("zcr: need at least 2 samples");
    auto sgn = [](T v) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); };
    T acc = T(0);
    for (size_t i = 1; i < frame.size(); ++i) acc += std::abs(sgn(frame[i]) - sgn(frame[i - 1]));
    return acc / (T(2) * static_cast<T>(frame.size()));
}

template <typename T>
T energy(const std::vector<T>& frame) {
    if (frame.empty()) throw std::invalid_argument("energy: empty frame");
    T acc = T(0);
    for (const T v : frame) acc += v * v;
    return acc / static_cast<T>(frame.size());
}

namespace detail {

// Shannon entropy in bits of energies normalized by their own sum.
// All-zero input maps to 0.
template <typename T>
T entropy_bits(const std::vector<T>& energies) {
    T total = T(0);
    for (const T e : energies) total += e;
    if (!(total > T(0))) return T(0);
    T h = T(0);
    for (const T e : energies) {
        const T p = e / total;
        if (p > T(0)) h -= p * std::log2(p);
    }
    return h;
}

}  // namespace detail

// Entropy of sub-frame energies; the remainder after splitting into n_sub
// equal sub-frames is ignored.
template <typename T>
T energy_entropy(const std::vector<T>& frame, int n_sub = 10) {
    if (n_sub < 1) throw std::invalid_argument("energy_entropy: need n_sub >= 1");
    if (frame.size() < static_cast<size_t>(n_sub))
        throw std::invalid_argument("energy_entropy: frame shorter than sub-frame count");
    const size_t sub = frame.size() / n_sub;
    std::vector<T> sub_e(n_sub, T(0));
    for (int s = 0; s < n_sub; ++s) {
        T acc = T(0);
        for (size_t i = s * sub; i < (s + 1) * sub; ++i) acc += frame[i] * frame[i];
        sub_e[s] = acc;
    }
    return detail::entropy_bits(sub_e);
}

// ---------------------------------------------------------------------------
// Spectral frame features. All take the magnitude spectrum (first floor(L/2)
// discrete-Fourier bins) of a frame.
// ---------------------------------------------------------------------------

// Centre of gravity and second central moment of the spectrum, both on the
// normalized position scale (bin k weighs in at (k+1)/K). A zero spectrum
// maps to (0.5, 0).
template <typename T>
std::pair<T, T> spectral_centroid_spread(const std::vector<T>& spectrum) {
    const size_t K = spectrum.size();
    if (K == 0) throw std::invalid_argument("spectral_centroid_spread: empty spectrum");
    T total = T(0);
    for (const T v : spectrum) total += v;
    if (!(total > T(0))) return {T(0.5), T(0)};
    T c = T(0);
    for (size_t k = 0; k < K; ++k) c += (static_cast<T>(k + 1) / K) * (spectrum[k] / total);
    T s2 = T(0);
    for (size_t k = 0; k < K; ++k) {
        const T d = static_cast<T>(k + 1) / K - c;
        s2 += d * d * (spectrum[k] / total);
    }
    return {c, std::sqrt(s2)};
}

// Entropy of squared magnitudes over n_sub equal bands (remainder ignored).
template <typename T>
T spectral_entropy(const std::vector<T>& spectrum, int n_sub = 10) {
    if (n_sub < 1) throw std::invalid_argument("spectral_entropy: need n_sub >= 1");
    if (spectrum.size() < static_cast<size_t>(n_sub))
        throw std::invalid_argument("spectral_entropy: spectrum shorter than band count");
    const size_t sub = spectrum.size() / n_sub;
    std::vector<T> band(n_sub, T(0));
    for (int s = 0; s < n_sub; ++s) {
        T acc = T(0);
        for (size_t i = s * sub; i < (s + 1) * sub; ++i) acc += spectrum[i] * spectrum[i];
        band[s] = acc;
    }
    return detail::entropy_bits(band);
}

// Sum of squared differences between the two spectra, each normalized by its
// own sum. A spectrum summing to zero contributes zeros.
template <typename T>
T spectral_flux(const std::vector<T>& cur, const std::vector<T>& prev) {
    if (cur.size() != prev.size())
        throw std::invalid_argument("spectral_flux: spectra differ in length");
    T sc = T(0), sp = T(0);
    for (const T v : cur) sc += v;
    for (const T v : prev) sp += v;
    const T ic = sc > T(0) ? T(1) / sc : T(0);
    const T ip = sp > T(0) ? T(1) / sp : T(0);
    T acc = T(0);
    for (size_t k = 0; k < cur.size(); ++k) {
        const T d = cur[k] * ic - prev[k] * ip;
        acc += d * d;
    }
    return acc;
}

// Smallest bin m whose cumulative squared magnitude reaches c of the total,
// as the fraction m/K. Zero spectrum maps to 0.
template <typename T>
T spectral_rolloff(const std::vector<T>& spectrum, T c = T(0.90)) {
    const size_t K = spectrum.size();
    if (K == 0) throw std::invalid_argument("spectral_rolloff: empty spectrum");
    T total = T(0);
    size_t last_nonzero = 0;
    for (size_t k = 0; k < K; ++k) {
        total += spectrum[k] * spectrum[k];
        if (spectrum[k] != T(0)) last_nonzero = k;
    }
    if (!(total > T(0))) return T(0);
    const T threshold = c * total;
    T acc = T(0);
    for (size_t k = 0; k < K; ++k) {
        acc += spectrum[k] * spectrum[k];
        if (acc >= threshold) return static_cast<T>(k) / K;
    }
    // Rounding can leave the running sum a hair short of c == 1 times total.
    return static_cast<T>(last_nonzero) / K;
}

// ---------------------------------------------------------------------------
// Mel filterbank cepstral coefficients.
// ---------------------------------------------------------------------------

struct MelFilterbankConfig {
    int linear_filters = 13;
    int log_filters = 27;
    double low_freq_hz = 133.33;
    double linear_spacing_hz = 200.0 / 3.0;
    double log_spacing = 1.0711703;
    int coefficients = 13;
};

// Triangular filters over spectrum bins. Filter i rises from edge i to edge
// i+1 and falls to edge i+2; its peak is 2/(edge[i+2]-edge[i]).
template <typename T>
class MelFilterbank {
public:
    MelFilterbank(const MelFilterbankConfig& cfg, int n_bins, double bin_hz)
        : cfg_(cfg), n_bins_(n_bins) {
        const int nf = cfg.linear_filters + cfg.log_filters;
        if (nf < 1 || cfg.coefficients < 1 || cfg.coefficients > nf)
            throw std::invalid_argument("MelFilterbank: bad filter/coefficient counts");
        std::vector<double> edge(nf + 2);
        for (int i = 0; i < cfg.linear_filters; ++i)
            edge[i] = cfg.low_freq_hz + i * cfg.linear_spacing_hz;
        const double pivot = edge[cfg.linear_filters - 1];
        for (int i = cfg.linear_filters; i < nf + 2; ++i)
            edge[i] = pivot * std::pow(cfg.log_spacing, i - (cfg.linear_filters - 1));
        weights_.assign(nf, std::vector<T>(n_bins, T(0)));
        for (int f = 0; f < nf; ++f) {
            const double lo = edge[f], mid = edge[f + 1], hi = edge[f + 2];
            const double height = 2.0 / (hi - lo);
            for (int k = 0; k < n_bins; ++k) {
                const double g = k * bin_hz;
                if (g >= lo && g < mid)
                    weights_[f][k] = static_cast<T>(height * (g - lo) / (mid - lo));
                else if (g >= mid && g <= hi)
                    weights_[f][k] = static_cast<T>(height * (hi - g) / (hi - mid));
            }
        }
    }

    int filters() const { return static_cast<int>(weights_.size()); }
    int bins() const { return n_bins_; }
    const std::vector<T>& filter(int i) const { return weights_[i]; }

    // Filter energies of the power spectrum (squared magnitudes).
    std::vector<T> apply(const std::vector<T>& spectrum) const {
        if (static_cast<int>(spectrum.size()) != n_bins_)
            throw std::invalid_argument("MelFilterbank: spectrum has " +
                                        std::to_string(spectrum.size()) + " bins, expected " +
                                        std::to_string(n_bins_));
        std::vector<T> out(weights_.size(), T(0));
        for (size_t f = 0; f < weights_.size(); ++f) {
            const std::vector<T>& w = weights_[f];
            T acc = T(0);
            for (int k = 0; k < n_bins_; ++k) acc += w[k] * spectrum[k] * spectrum[k];
            out[f] = acc;
        }
        return out;
    }

    // Log filter energies (floored at 1e-10) through an orthonormal type-II
    // cosine transform; the first `coefficients` outputs, constant term
    // included.
    std::vector<T> cepstrum(const std::vector<T>& spectrum) const {
        const std::vector<T> e = apply(spectrum);
        const int M = static_cast<int>(e.size());
        std::vector<T> loge(M);
        for (int m = 0; m < M; ++m) loge[m] = std::log(std::max(e[m], T(1e-10)));
        std::vector<T> out(cfg_.coefficients, T(0));
        for (int j = 0; j < cfg_.coefficients; ++j) {
            T acc = T(0);
            for (int m = 0; m < M; ++m)
                acc += loge[m] * std::cos(M_PI * j * (2 * m + 1) / (2.0 * M));
            const T cj = j == 0 ? std::sqrt(T(1) / M) : std::sqrt(T(2) / M);
            out[j] = cj * acc;
        }
        return out;
    }

private:
    MelFilterbankConfig cfg_;
    int n_bins_;
    std::vector<std::vector<T>> weights_;
};

// Spectrum-only convenience used by tests; assumes an even frame length so
// bin k sits at k*rate/(2K) Hz.
template <typename T>
std::vector<T> mfcc(const std::vector<T>& spectrum, int sample_rate,
                    const MelFilterbankConfig& cfg = {}) {
    const MelFilterbank<T> fb(cfg, static_cast<int>(spectrum.size()),
                              sample_rate / (2.0 * spectrum.size()));
    return fb.cepstrum(spectrum);
}

// ---------------------------------------------------------------------------
// Chroma vector.
// ---------------------------------------------------------------------------

// Pitch-class index per spectrum bin; class 0 is A (440 Hz). Bin 0 carries
// no pitch and is skipped.
class ChromaMap {
public:
    ChromaMap(int n_bins, double bin_hz) : pitch_class_(n_bins, -1) {
        for (int k = 1; k < n_bins; ++k) {
            const double f = k * bin_hz;
            const long pc = std::lround(12.0 * std::log2(f / 440.0));
            pitch_class_[k] = static_cast<int>(((pc % 12) + 12) % 12);
        }
    }
    int at(int bin) const { return pitch_class_[bin]; }
    int bins() const { return static_cast<int>(pitch_class_.size()); }

    // Normalized per-class squared-magnitude mass and its population
    // standard deviation. Zero spectrum maps to the uniform vector.
    template <typename T>
    std::pair<std::array<T, 12>, T> accumulate(const std::vector<T>& spectrum) const {
        if (static_cast<int>(spectrum.size()) != bins())
            throw std::invalid_argument("ChromaMap: spectrum has " +
                                        std::to_string(spectrum.size()) + " bins, expected " +
                                        std::to_string(bins()));
        std::array<T, 12> v{};
        for (int k = 1; k < bins(); ++k) v[pitch_class_[k]] += spectrum[k] * spectrum[k];
        T total = T(0);
        for (const T x : v) total += x;
        if (total > T(0)) {
            for (T& x : v) x /= total;
        } else {
            v.fill(T(1) / T(12));
        }
        T mean = T(0);
        for (const T x : v) mean += x;
        mean /= T(12);
        T var = T(0);
        for (const T x : v) var += (x - mean) * (x - mean);
        var /= T(12);
        return {v, std::sqrt(var)};
    }

private:
    std::vector<int> pitch_class_;
};

template <typename T>
std::pair<std::array<T, 12>, T> chroma(const std::vector<T>& spectrum, int sample_rate) {
    const ChromaMap map(static_cast<int>(spectrum.size()), sample_rate / (2.0 * spectrum.size()));
    return map.accumulate(spectrum);
}

// ---------------------------------------------------------------------------
// Full per-frame vector and the N x 68 aggregation.
// ---------------------------------------------------------------------------

struct FeatureConfig {
    int n_partitions = 6;
    double window_s = 0.05;
    double step_s = 0.025;
    bool hamming_window = false;  // rectangular frames by default
    MelFilterbankConfig mel;
};

// Per-frame feature machinery for one fixed frame length; owns the transform
// plan, filterbank and chroma map so per-frame work is pure arithmetic.
template <typename T>
class FrameAnalyzer {
public:
    FrameAnalyzer(int frame_len, int sample_rate, const FeatureConfig& cfg)
        : dft_(frame_len),
          mel_(cfg.mel, frame_len / 2, static_cast<double>(sample_rate) / frame_len),
          chroma_(frame_len / 2, static_cast<double>(sample_rate) / frame_len),
          hamming_(cfg.hamming_window ? frame_len : 0) {
        for (size_t i = 0; i < hamming_.size(); ++i)
            hamming_[i] = static_cast<T>(0.54 - 0.46 * std::cos(2.0 * M_PI * i / (frame_len - 1)));
    }

    std::vector<T> spectrum(const std::vector<T>& frame) const {
        if (hamming_.empty()) return dft_.magnitudes(frame);
        std::vector<T> windowed(frame.size());
        for (size_t i = 0; i < frame.size(); ++i) windowed[i] = frame[i] * hamming_[i];
        return dft_.magnitudes(windowed);
    }

    // 34 features in fixed order. `prev_spectrum` feeds the flux; pass
    // nullptr on a partition's first frame (flux 0 by convention).
    std::array<T, kShortTermFeatureCount> features(const std::vector<T>& frame,
                                                   const std::vector<T>& spectrum,
                                                   const std::vector<T>* prev_spectrum) const {
        std::array<T, kShortTermFeatureCount> out{};
        out[0] = zcr(frame);
        out[1] = energy(frame);
        out[2] = energy_entropy(frame);
        const auto [centroid, spread] = spectral_centroid_spread(spectrum);
        out[3] = centroid;
        out[4] = spread;
        out[5] = spectral_entropy(spectrum);
        out[6] = prev_spectrum ? spectral_flux(spectrum, *prev_spectrum) : T(0);
        out[7] = spectral_rolloff(spectrum);
        const std::vector<T> cep = mel_.cepstrum(spectrum);
        for (int i = 0; i < 13; ++i) out[8 + i] = cep[i];
        const auto [ch, dev] = chroma_.template accumulate<T>(spectrum);
        for (int i = 0; i < 12; ++i) out[21 + i] = ch[i];
        out[33] = dev;
        return out;
    }

private:
    Dft<T> dft_;
    MelFilterbank<T> mel_;
    ChromaMap chroma_;
    std::vector<T> hamming_;
};

// Per partition: mean then population standard deviation of each of the 34
// frame features, rows in partition time order.
template <typename T>
Tensor<T> extract_features(const AudioClip<T>& clip, const FeatureConfig& cfg = {}) {
    const auto parts = partition_audio(clip, cfg.n_partitions);
    const int frame_len = static_cast<int>(std::lround(cfg.window_s * clip.sample_rate));
    const FrameAnalyzer<T> analyzer(frame_len, clip.sample_rate, cfg);

    Tensor<T> out({cfg.n_partitions, kPartitionFeatureWidth});
    for (int p = 0; p < cfg.n_partitions; ++p) {
        const auto frames = frame_signal(parts[p], cfg.window_s, cfg.step_s);
        if (frames.size() < 2)
            throw DataFormatError("extract_features: partition " + std::to_string(p) +
                                  " yields " + std::to_string(frames.size()) +
                                  " frames, need at least 2");
        std::vector<std::array<T, kShortTermFeatureCount>> rows;
        rows.reserve(frames.size());
        std::vector<T> prev_spectrum;
        for (size_t fi = 0; fi < frames.size(); ++fi) {
            std::vector<T> spectrum = analyzer.spectrum(frames[fi]);
            rows.push_back(
                analyzer.features(frames[fi], spectrum, fi == 0 ? nullptr : &prev_spectrum));
            prev_spectrum = std::move(spectrum);
        }
        T* dst = out.data.data() + static_cast<size_t>(p) * kPartitionFeatureWidth;
        const T inv_n = T(1) / static_cast<T>(rows.size());
        for (int f = 0; f < kShortTermFeatureCount; ++f) {
            T mean = T(0);
            for (const auto& r : rows) mean += r[f];
            mean *= inv_n;
            T var = T(0);
            for (const auto& r : rows) var += (r[f] - mean) * (r[f] - mean);
            var *= inv_n;
            dst[f] = mean;
            dst[kShortTermFeatureCount + f] = std::sqrt(var);
        }
    }
    return out;
}

// CSV form: one row per partition, headers f00_mean..f33_mean,f00_std..f33_std,
// 9 significant digits.
template <typename T>
void write_features_csv(std::ostream& os, const Tensor<T>& features) {
    if (features.rank() != 2 || features.dim(1) != kPartitionFeatureWidth)
        throw std::invalid_argument("write_features_csv: expected an N x 68 matrix, got " +
                                    shape_str(features.shape));
    for (int part = 0; part < 2; ++part)
        for (int f = 0; f < kShortTermFeatureCount; ++f) {
            char head[16];
            std::snprintf(head, sizeof(head), "f%02d_%s", f, part == 0 ? "mean" : "std");
            os << (part == 0 && f == 0 ? "" : ",") << head;
        }
    os << "\n";
    char buf[32];
    for (int r = 0; r < features.dim(0); ++r) {
        for (int c = 0; c < kPartitionFeatureWidth; ++c) {
            std::snprintf(buf, sizeof(buf), "%.9g",
                          static_cast<double>(features[static_cast<size_t>(r) *
                                                       kPartitionFeatureWidth + c]));
            os << (c == 0 ? "" : ",") << buf;
        }
        os << "\n";
    }
}

}  // namespace impress
