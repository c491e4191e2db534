#pragma once

#include <cstdint>
#include <random>

namespace tri {

/// Seeded generator used by every sampler in the library. Wraps
/// std::mt19937_64 so that streams are reproducible for a given seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Independent stream for (seed, index), e.g. one per pixel. The index is
    /// mixed through splitmix64 so neighbouring indices give unrelated streams.
    static Rng derive(std::uint64_t seed, std::uint64_t index) {
        return Rng(mix(seed ^ mix(index + 0x9e3779b97f4a7c15ULL)));
    }

    /// Uniform in [0, 1).
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    double normal(double mean, double stddev) {
        if (stddev == 0.0) return mean;
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }
    std::uint64_t next() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
};

} // namespace tri
