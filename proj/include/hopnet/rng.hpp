#pragma once
// Self-contained RNG (xoshiro256++ seeded via splitmix64).
//
// The standard <random> distributions are implementation-defined, which would
// break the byte-identical-outputs contract of the experiment runner, so all
// draws (uniform doubles, bounded ints, Poisson counts) are spelled out here.

#include <cstdint>
#include <cmath>
#include <stdexcept>

namespace hopnet {

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        // splitmix64 expansion of the seed into the xoshiro state
        std::uint64_t x = seed;
        for (auto& w : s_) {
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            w = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform on [0,1) with 53-bit resolution
    double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // uniform on {0, ..., n-1}; unbiased via rejection
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do { x = next_u64(); } while (x >= limit);
        return x % n;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Poisson count by accumulating unit-rate exponential arrivals until the
    // total exceeds mean.  O(mean) draws, numerically safe for the window
    // intensities used here (mean up to a few thousand).
    std::uint64_t poisson(double mean) {
        if (!(mean >= 0.0)) throw std::invalid_argument("poisson: mean must be >= 0");
        std::uint64_t count = 0;
        double acc = 0.0;
        for (;;) {
            double u;
            do { u = uniform01(); } while (u <= 0.0);
            acc += -std::log(u);
            if (acc >= mean) break;
            ++count;
        }
        return count;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

} // namespace hopnet
