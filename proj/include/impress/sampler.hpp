#pragma once

#include <string>
#include <vector>

#include "impress/errors.hpp"
#include "impress/rng.hpp"

namespace impress {

// Contiguous time-ordered split of a video's frames: partition i covers
// [begin[i], begin[i+1]). First n-1 partitions hold floor(total/n) frames,
// the last takes the remainder.
struct FramePartitioning {
    int total_frames = 0;
    int n_partitions = 0;
    std::vector<int> begin;  // n_partitions + 1 fenceposts

    int size(int i) const { return begin[i + 1] - begin[i]; }
};

inline FramePartitioning partition_frames(int total_frames, int n) {
    if (n < 1) throw std::invalid_argument("partition_frames: need n >= 1");
    if (total_frames < n)
        throw DataFormatError("partition_frames: " + std::to_string(total_frames) +
                              " frames cannot fill " + std::to_string(n) + " partitions");
    FramePartitioning p;
    p.total_frames = total_frames;
    p.n_partitions = n;
    p.begin.resize(n + 1);
    const int base = total_frames / n;
    for (int i = 0; i < n; ++i) p.begin[i] = i * base;
    p.begin[n] = total_frames;
    return p;
}

// One frame index per partition. Indices are strictly increasing because
// partitions are contiguous and ascending.
struct FrameCombination {
    std::vector<int> indices;
};

// Uniform independent draw from each partition; pure in (partitioning, seed).
inline FrameCombination sample_combination(const FramePartitioning& p, uint64_t seed) {
    SplitMix64 rng(seed);
    FrameCombination c;
    c.indices.resize(p.n_partitions);
    for (int i = 0; i < p.n_partitions; ++i)
        c.indices[i] = p.begin[i] + static_cast<int>(rng.below(static_cast<uint64_t>(p.size(i))));
    return c;
}

// The combination a given video contributes at a given epoch. Seeding by
// (base_seed, video, epoch) keeps the plan independent of processing order.
inline FrameCombination epoch_plan(const FramePartitioning& p, uint64_t video_hash, int epoch,
                                   uint64_t base_seed) {
    const uint64_t s = seed_combine(seed_combine(base_seed, video_hash),
                                    static_cast<uint64_t>(epoch));
    return sample_combination(p, s);
}

// k independent draws for test-time averaging; duplicates are permitted.
inline std::vector<FrameCombination> test_combinations(const FramePartitioning& p, int k,
                                                       uint64_t seed) {
    if (k < 1) throw std::invalid_argument("test_combinations: need k >= 1");
    std::vector<FrameCombination> out;
    out.reserve(k);
    for (int j = 0; j < k; ++j)
        out.push_back(sample_combination(p, seed_combine(seed, static_cast<uint64_t>(j))));
    return out;
}

}  // namespace impress
