#pragma once

#include <cmath>
#include <cstdint>

namespace motorsig {

// Deterministic random numbers with a pinned algorithm so that seeded runs
// reproduce bit-identically on every platform (std::normal_distribution is
// implementation-defined, so it is not used anywhere in this library).
//
// Stream: xoshiro256++ seeded through splitmix64.
// Uniforms: 53-bit mantissa doubles in [0, 1).
// Normals: Box-Muller, exactly two uniforms consumed per draw.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    // Derives the seed of an independent stream, e.g. one per trial index.
    // Chaining derive_seed calls partitions one root seed into a tree of
    // decorrelated streams.
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t sm = seed;
        return splitmix64(sm) ^ (0xd1342543de82ef95ULL * (stream + 1));
    }

    static Rng derive(std::uint64_t seed, std::uint64_t stream) {
        return Rng(derive_seed(seed, stream));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
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
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; u1 is shifted into (0, 1] so the log
    // is always finite.
    double normal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4]{};
};

}  // namespace motorsig
