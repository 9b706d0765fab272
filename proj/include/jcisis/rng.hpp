#pragma once

// Portable seeded random numbers for the simulation studies.
//
// Generator: xoshiro256** (Blackman & Vigna), state filled by four successive
// splitmix64 outputs of the seed. Uniforms take the top 53 bits. Normals use
// the Box-Muller cosine branch, two uniforms per draw.
//
// Stream splitting: child_seed(seed, k) = splitmix64_mix(seed + (k + 1) * 0x9E3779B97F4A7C15).
// A replicate r runs with child_seed(study_seed, r); inside a replicate,
// stream 0 drives the response or any latent variable and stream j + 1 drives
// predictor column j.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace jcisis {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t child_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return splitmix64_mix(seed + (stream + 1) * kGoldenGamma);
}

class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed) noexcept {
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x += kGoldenGamma;
            word = splitmix64_mix(x);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept {
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

    /// Uniform on [0, 1).
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    bool bernoulli(double prob) noexcept { return uniform() < prob; }

    double normal(double mean = 0.0, double sd = 1.0) noexcept {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
};

}  // namespace jcisis
