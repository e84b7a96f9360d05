#pragma once

#include <cstdint>

namespace fiberplan {

// Deterministic 64-bit generator (xoshiro256** seeded via splitmix64).
// All randomized stages draw from an Rng so results are reproducible
// byte-for-byte for a given seed, independent of platform stdlib and
// thread count. Child streams are derived with split(), which hashes
// (seed, stream id); the derivation is part of the reproducibility
// contract so strategies sharing a scenario seed stay comparable.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t x = seed;
        for (auto& s : state_) s = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        // Rejection sampling to avoid modulo bias.
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    std::uint64_t seed() const { return seed_; }

    // Derives an independent child stream; deterministic in (seed, id).
    static std::uint64_t child_seed(std::uint64_t seed, std::uint64_t id) {
        std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL + id * 0xbf58476d1ce4e5b9ULL);
        return splitmix64(x);
    }

    Rng split(std::uint64_t id) const { return Rng(child_seed(seed_, id)); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_[4]{};
    std::uint64_t seed_{0};
};

} // namespace fiberplan
