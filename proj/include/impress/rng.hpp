#pragma once

#include <cstdint>
#include <string_view>

namespace impress {

// SplitMix64 stream. Counter-based, integer-only, identical on every
// platform, so every sampling decision is a pure function of its seed.
struct SplitMix64 {
    uint64_t state = 0;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform integer in [0, n), n >= 1. Rejection keeps it unbiased.
    uint64_t below(uint64_t n) {
        uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            uint64_t x = next();
            if (x >= threshold) return x % n;
        }
    }

    // Uniform double in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform double in [-bound, bound].
    double symmetric(double bound) { return (unit() * 2.0 - 1.0) * bound; }
};

// Derives an independent stream seed from two components.
inline uint64_t seed_combine(uint64_t a, uint64_t b) {
    SplitMix64 m(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
    return m.next();
}

// Stable 64-bit FNV-1a hash; used to fold string ids into stream seeds.
inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace impress
