#pragma once

#include <cstdint>
#include <random>

namespace scfc {

// Deterministic random source. mt19937_64 output is pinned by the standard;
// the scaling helpers below avoid std::uniform_*_distribution, whose results
// vary across library implementations. Same seed, same stream, everywhere.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), rejection-sampled to stay unbiased.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t draw = engine_();
        while (draw >= limit) draw = engine_();
        return draw % n;
    }

    // Independent child stream derived from the original seed and a tag
    // (splitmix64), so sub-tasks get stable streams regardless of how much
    // the parent has been consumed.
    Rng split(std::uint64_t tag) const {
        std::uint64_t z = seed_ + tag * 0x9e3779b97f4a7c15ULL + 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return Rng(z ^ (z >> 31));
    }

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace scfc
