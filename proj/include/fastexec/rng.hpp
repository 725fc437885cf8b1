#pragma once

#include <cstdint>
#include <random>

namespace fastexec {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Per-path random stream keyed by (seed, path index). Streams are disjoint
/// and independent of scheduling, so path-parallel runs reproduce the
/// sequential results bit for bit.
class PathRng {
public:
    PathRng(uint64_t seed, uint64_t path)
        : eng_(splitmix64(splitmix64(seed) ^ splitmix64(path + 0x51ED2700A1B2C3D4ULL))) {}

    double normal() { return normal_(eng_); }
    double uniform() { return uniform_(eng_); }
    uint64_t next_u64() { return eng_(); }
    /// Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return eng_() % n; }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace fastexec
