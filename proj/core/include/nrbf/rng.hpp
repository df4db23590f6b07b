#pragma once

#include <cstdint>
#include <string_view>

namespace nrbf {

/// Deterministic 64-bit generator (PCG64, oneseq variant). The same seed
/// always yields the same stream, on any platform building this library.
/// Sub-streams for independent purposes (data, init, shuffle, ...) are
/// derived via split(), which mixes a tag into the parent seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1).
    double uniform();
    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);
    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n);
    /// Standard normal via Box-Muller (hand-rolled, so the stream is
    /// independent of the C++ standard library implementation).
    double normal();
    double normal(double mean, double stddev);

    std::uint64_t seed() const { return seed_; }

    /// Independent sub-stream derived deterministically from (seed, tag).
    Rng split(std::string_view tag) const;
    Rng split(std::uint64_t tag) const;

private:
    using u128 = unsigned __int128;
    std::uint64_t seed_;
    u128 state_;
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

/// SplitMix64 finalizer; used for seed derivation and hashing tags.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace nrbf
