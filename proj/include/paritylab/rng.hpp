#pragma once

#include <cstdint>
#include <random>

namespace paritylab {

// Pinned uniform generation. std::uniform_real_distribution is
// implementation-defined, so anything that feeds a reproducibility artifact
// draws through this wrapper instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // [0, 1), 53 random bits
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // [0, bound), bound > 0
    std::uint64_t below(std::uint64_t bound) { return eng_() % bound; }

private:
    std::mt19937_64 eng_;
};

}  // namespace paritylab
