#pragma once

#include <cmath>
#include <cstdint>

namespace markup::rng {

// splitmix64 step; used only to expand seeds into engine state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Counter-seeded xoshiro256++ stream. A (seed, stream_id) pair fully
// determines the sequence, so ensembles can hand one independent stream
// to each path regardless of evaluation order or thread count.
//
// All distributions are generated from explicit uniform bits (no
// std::*_distribution), so output is identical across standard libraries.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t stream_id) {
        std::uint64_t s = seed;
        std::uint64_t mix = splitmix64(s) ^ (stream_id * 0xD2B74407B1CE6E93ull);
        for (auto& word : state_) word = splitmix64(mix);
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

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1].
    double uniform_open() { return 1.0 - uniform(); }

    // Standard normal via the Box-Muller transform. Consumes exactly two
    // uniforms per call, which keeps stream accounting trivial.
    double normal() {
        const double u1 = uniform_open();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    // Exact Poisson draw. Knuth inversion on chunks of mean <= 20 so the
    // running product never underflows; Poisson additivity makes the
    // chunked draw exact for any mean.
    std::int64_t poisson(double mean) {
        std::int64_t total = 0;
        while (mean > 0.0) {
            const double chunk = mean > 20.0 ? 20.0 : mean;
            const double limit = std::exp(-chunk);
            double prod = 1.0;
            for (;;) {
                prod *= uniform_open();
                if (prod <= limit) break;
                ++total;
            }
            mean -= chunk;
        }
        return total;
    }

private:
    static constexpr double kPi = 3.14159265358979323846;
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

// Stream-id bases keeping the library's internal consumers disjoint.
inline constexpr std::uint64_t kPathStreamBase = 0;
inline constexpr std::uint64_t kCheckStreamBase = 0x6368656B00000000ull;

}  // namespace markup::rng
