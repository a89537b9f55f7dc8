#pragma once

#include <array>
#include <vector>

#include "paritylab/bitstring.hpp"

namespace paritylab {

using Vec4 = std::array<double, 4>;

// Fixed 4-d embeddings: token part in coordinates 0..1, positional part in
// coordinates 2..3. Position j sits at angle 2*pi*j/n on the unit circle.
// Immutable after construction; shared read-only across workers.
struct EmbeddingTable {
    int n = 0;
    std::vector<double> sin_pos;  // sin(2*pi*j/n) at index j-1
    std::vector<double> cos_pos;

    explicit EmbeddingTable(int n);

    double sin_at(int pos) const { return sin_pos[static_cast<std::size_t>(pos - 1)]; }
    double cos_at(int pos) const { return cos_pos[static_cast<std::size_t>(pos - 1)]; }

    static constexpr std::array<double, 2> token0{0.0, 1.0};
    static constexpr std::array<double, 2> token1{1.0, 0.0};
    static constexpr Vec4 cls{1.0, 0.0, 0.0, 0.0};

    // w_j for token value x_j at position j
    Vec4 token_embedding(int bit_value, int pos) const {
        const auto& t = bit_value ? token1 : token0;
        return {t[0], t[1], sin_at(pos), cos_at(pos)};
    }
};

inline EmbeddingTable build_table(int n) { return EmbeddingTable(n); }

// Sequence [w_0 (CLS), w_1, ..., w_n].
std::vector<Vec4> embed_input(const BitString& x, const EmbeddingTable& table);

}  // namespace paritylab
