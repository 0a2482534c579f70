#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace trimix {

// Deterministic RNG used everywhere randomness appears. The raw stream is
// mt19937_64 (bit-exact for a given seed per the standard); the float/normal
// transforms are hand-rolled so no libstdc++ distribution internals leak into
// the reproducibility contract. Call order defines the stream: any code that
// draws must do so in a documented, fixed order.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Multiply-shift; bias is < n / 2^64.
    int64_t uniform_int(int64_t n) {
        return static_cast<int64_t>((static_cast<unsigned __int128>(next_u64()) *
                                     static_cast<unsigned __int128>(n)) >>
                                    64);
    }

    // Standard normal via Box-Muller; generates pairs, caches the second.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53; // ln(0) guard, keeps the map total
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace trimix
