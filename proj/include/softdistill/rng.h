#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

namespace softdistill {

// Deterministic PRNG used for every stochastic choice in the project.
//
// Algorithm: SplitMix64 (Steele, Lea, Flood 2014). Stream derivation: the
// initial state is the FNV-1a 64-bit hash of (seed LE bytes, purpose label,
// stream index LE bytes), so each (seed, label, index) triple is an
// independent, reproducible stream. All draw-to-value mappings below are
// fixed by this implementation, never delegated to std::<distribution>,
// which keeps sequences bit-identical across platforms and toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t state) : state_(state) {}

    // Stream keyed by (run seed, purpose label, optional index such as epoch).
    static Rng stream(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) {
        std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV offset basis
        auto mix_byte = [&h](std::uint8_t b) {
            h ^= b;
            h *= 0x100000001b3ULL;  // FNV prime
        };
        for (int i = 0; i < 8; ++i) mix_byte(static_cast<std::uint8_t>(seed >> (8 * i)));
        for (char c : label) mix_byte(static_cast<std::uint8_t>(c));
        for (int i = 0; i < 8; ++i) mix_byte(static_cast<std::uint8_t>(index >> (8 * i)));
        return Rng(h);
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Box-Muller without the cached spare so the state stays a single u64.
    double next_gaussian() {
        double u1 = next_unit();
        while (u1 == 0.0) u1 = next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Unbiased integer in [0, bound) by rejection.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % bound;
    }

    // Fisher-Yates, high-to-low.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

inline std::vector<int> random_permutation(int n, Rng& rng) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    rng.shuffle(perm);
    return perm;
}

}  // namespace softdistill
