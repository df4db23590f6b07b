#include "nrbf/rng.hpp"

#include <cmath>
#include <numbers>

namespace nrbf {

namespace {

constexpr unsigned __int128 pcg_mult() {
    return (static_cast<unsigned __int128>(2549297995355413924ULL) << 64) |
           4865540595714422341ULL;
}

constexpr unsigned __int128 pcg_inc() {
    return (static_cast<unsigned __int128>(6364136223846793005ULL) << 64) |
           1442695040888963407ULL;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed) {
    // pcg64_oneseq seeding: state = (initstate + inc) advanced once.
    const u128 initstate = (static_cast<u128>(splitmix64(seed)) << 64) |
                           splitmix64(seed ^ 0xda3e39cb94b95bdbULL);
    state_ = initstate + pcg_inc();
    next_u64();
}

std::uint64_t Rng::next_u64() {
    // PCG-XSL-RR 128/64.
    const u128 old = state_;
    state_ = old * pcg_mult() + pcg_inc();
    const std::uint64_t xored =
        static_cast<std::uint64_t>(old >> 64) ^ static_cast<std::uint64_t>(old);
    const unsigned rot = static_cast<unsigned>(old >> 122);
    return (xored >> rot) | (xored << ((-rot) & 63U));
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::uniform_index(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t threshold = (0ULL - n) % n;
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

double Rng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_normal_ = r * std::sin(angle);
    has_cached_normal_ = true;
    return r * std::cos(angle);
}

double Rng::normal(double mean, double stddev) { return mean + stddev * normal(); }

Rng Rng::split(std::uint64_t tag) const {
    return Rng(splitmix64(seed_ ^ splitmix64(tag ^ 0xa0761d6478bd642fULL)));
}

Rng Rng::split(std::string_view tag) const {
    // FNV-1a over the tag bytes, then mixed with the parent seed.
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return split(h);
}

}  // namespace nrbf
