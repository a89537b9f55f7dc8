#include "paritylab/bitstring.hpp"

#include <algorithm>

#include "paritylab/rng.hpp"

namespace paritylab {

ParitySpec ParitySpec::make(int n, std::vector<int> bits) {
    if (n < 1 || n > kMaxEnumerationBits) throw std::invalid_argument("ParitySpec: n out of range");
    if (bits.empty()) throw std::invalid_argument("ParitySpec: parity set must be non-empty");
    std::sort(bits.begin(), bits.end());
    if (std::adjacent_find(bits.begin(), bits.end()) != bits.end()) {
        throw std::invalid_argument("ParitySpec: duplicate positions");
    }
    if (bits.front() < 1 || bits.back() > n) {
        throw std::invalid_argument("ParitySpec: positions must be in 1..n");
    }
    ParitySpec spec;
    spec.n = n;
    spec.bits = std::move(bits);
    return spec;
}

ParitySpec ParitySpec::random(int n, int k, std::uint64_t seed) {
    if (k < 1 || k > n) throw std::invalid_argument("ParitySpec: k must be in 1..n");
    // Partial Fisher-Yates on 1..n, pinned to the Rng stream.
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i + 1;
    Rng rng(seed);
    for (int i = 0; i < k; ++i) {
        const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(k));
    return make(n, std::move(pool));
}

}  // namespace paritylab
