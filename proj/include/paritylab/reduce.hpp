#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

#include "paritylab/bitstring.hpp"

namespace paritylab {

// Fixed block size: the partition of the input range never depends on the
// worker count, so parallel and serial runs reduce bit-exactly.
inline constexpr std::uint64_t kReduceBlock = 4096;

// Accumulates per_input(word, acc) over all 2^n inputs in counter order
// within fixed blocks, then combines block sums by pairwise tree reduction.
// acc is a dim-length vector of doubles, added coordinate-wise.
template <class PerInput>
std::vector<double> reduce_over_inputs(int n, std::size_t dim, int threads, PerInput&& per_input) {
    const std::uint64_t total = input_count(n);
    const std::uint64_t nblocks = (total + kReduceBlock - 1) / kReduceBlock;

    std::vector<std::vector<double>> block_sums(nblocks);
    auto run_block = [&](std::uint64_t b) {
        std::vector<double> acc(dim, 0.0);
        const std::uint64_t lo = b * kReduceBlock;
        const std::uint64_t hi = std::min(total, lo + kReduceBlock);
        for (std::uint64_t w = lo; w < hi; ++w) {
            per_input(static_cast<std::uint32_t>(w), acc.data());
        }
        block_sums[b] = std::move(acc);
    };

    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(nblocks)));
    if (workers == 1) {
        for (std::uint64_t b = 0; b < nblocks; ++b) run_block(b);
    } else {
        std::atomic<std::uint64_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (std::uint64_t b = next.fetch_add(1); b < nblocks; b = next.fetch_add(1)) {
                    run_block(b);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    // Pairwise tree combine; the shape depends only on the block count.
    std::vector<std::vector<double>> level = std::move(block_sums);
    while (level.size() > 1) {
        std::vector<std::vector<double>> up;
        up.reserve((level.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
            std::vector<double> merged = std::move(level[i]);
            for (std::size_t d = 0; d < dim; ++d) merged[d] += level[i + 1][d];
            up.push_back(std::move(merged));
        }
        if (level.size() % 2 == 1) up.push_back(std::move(level.back()));
        level = std::move(up);
    }
    return level.empty() ? std::vector<double>(dim, 0.0) : std::move(level.front());
}

}  // namespace paritylab
