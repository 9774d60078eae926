#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <string_view>
#include <vector>

namespace realdiff {

// Deterministic random source. All draws are derived from mt19937_64 raw
// output only (no std::*_distribution), so sequences are identical across
// standard-library implementations. A master seed fans out into named
// sub-streams via stream(): seed' = splitmix64(seed ^ fnv1a(label) ^ index).
class Rng {
  public:
    explicit Rng(uint64_t seed) : seed_(seed), gen_(seed) {}

    uint64_t seed() const { return seed_; }

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n). n must be > 0.
    uint64_t below(uint64_t n) {
        const uint64_t threshold = (0u - n) % n;
        for (;;) {
            const uint64_t r = gen_();
            if (r >= threshold) return r % n;
        }
    }

    // Standard normal via Box-Muller; consumes exactly two uniforms per draw.
    double normal() {
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Named child stream, independent of draws made on this Rng so far.
    Rng stream(std::string_view label, uint64_t index = 0) const {
        return Rng(splitmix64(seed_ ^ fnv1a(label) ^ (0x9e3779b97f4a7c15ull * (index + 1))));
    }

    static uint64_t fnv1a(std::string_view s) {
        uint64_t h = 1469598103934665603ull;
        for (const char c : s) {
            h ^= static_cast<uint8_t>(c);
            h *= 1099511628211ull;
        }
        return h;
    }

    static uint64_t splitmix64(uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

  private:
    uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace realdiff
