#include "paritylab/embedding.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace paritylab {

EmbeddingTable::EmbeddingTable(int n_in) : n(n_in) {
    if (n < 1) throw std::invalid_argument("EmbeddingTable: n must be >= 1");
    sin_pos.resize(static_cast<std::size_t>(n));
    cos_pos.resize(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j) {
        const double angle = 2.0 * std::numbers::pi * j / n;
        sin_pos[static_cast<std::size_t>(j - 1)] = std::sin(angle);
        cos_pos[static_cast<std::size_t>(j - 1)] = std::cos(angle);
    }
}

std::vector<Vec4> embed_input(const BitString& x, const EmbeddingTable& table) {
    if (x.size() != table.n) throw std::invalid_argument("embed_input: length mismatch");
    std::vector<Vec4> out;
    out.reserve(static_cast<std::size_t>(table.n) + 1);
    out.push_back(EmbeddingTable::cls);
    for (int j = 1; j <= table.n; ++j) {
        out.push_back(table.token_embedding(x.bit(j), j));
    }
    return out;
}

}  // namespace paritylab
