#pragma once

#include <cmath>
#include <cstdint>

namespace emgsnn {

// Counter-based 64-bit generator (SplitMix64). The k-th output is a pure
// function of (seed, k), so every artifact produced from a seed is
// reproducible bit-for-bit across platforms and compilers. Substreams are
// opened with derive(), never by sharing a generator.
//
// Reference: Steele, Lea, Flood, "Fast splittable pseudorandom number
// generators", OOPSLA 2014.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : state_(seed) {}

    // SplitMix64 finalizer; also usable as a standalone 64-bit mixer.
    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Independent substream seed for (seed, stream). Used for per-channel
    // noise, per-action bursts, per-epoch shuffles.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        return mix64(seed + GOLDEN * (stream + 1));
    }
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
        return derive(derive(seed, a), b);
    }

    std::uint64_t next_u64() {
        state_ += GOLDEN;
        return mix64(state_);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Modulo bias is irrelevant at 64 bits for the
    // small n used here; the modulo keeps the mapping platform-stable.
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller on two counter draws. No libm entropy,
    // no implementation-defined distribution state.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static constexpr std::uint64_t GOLDEN = 0x9e3779b97f4a7c15ULL;

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace emgsnn
