#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "paritylab/bitstring.hpp"
#include "paritylab/embedding.hpp"

namespace paritylab {

enum class AttentionMode { soft, hard };

// Trainable heads of the learning experiments: two reals per head multiplying
// the sinusoidal positional coordinates of each key. Token-row entries stay
// pinned to zero, so raw scores are input-independent.
struct AttentionHeads {
    std::vector<std::array<double, 2>> params;  // (a13, a14) per head
    double tau = 1.0;
    AttentionMode mode = AttentionMode::soft;

    int count() const { return static_cast<int>(params.size()); }
};

// Full 4x4 head for the fixed-attention experiments. The CLS query is
// [1,0,0,0], so only the first row enters any score.
struct GeneralAttentionMatrix {
    std::array<std::array<double, 4>, 4> a{};

    double score(int bit_value, double sin_pos, double cos_pos) const {
        return (bit_value ? a[0][0] : a[0][1]) + a[0][2] * sin_pos + a[0][3] * cos_pos;
    }
    double pos_score(double sin_pos, double cos_pos) const {
        return a[0][2] * sin_pos + a[0][3] * cos_pos;
    }

    static GeneralAttentionMatrix from_positional(double a13, double a14) {
        GeneralAttentionMatrix m;
        m.a[0][2] = a13;
        m.a[0][3] = a14;
        return m;
    }
    // Head aligned with position target: a13 = sin(2*pi*target/n), a14 = cos(...)
    static GeneralAttentionMatrix aligned_with(int target, const EmbeddingTable& table) {
        return from_positional(table.sin_at(target), table.cos_at(target));
    }
};

// m x n softmax score matrix; every row is a probability vector.
struct AttentionMap {
    int m = 0;
    int n = 0;
    std::vector<double> gamma;  // row-major

    double at(int head, int pos) const {
        return gamma[static_cast<std::size_t>(head - 1) * n + (pos - 1)];
    }
};

// s_j = a13*sin(2*pi*j/n) + a14*cos(2*pi*j/n); independent of the input bits.
std::vector<double> raw_scores(const std::array<double, 2>& head, const EmbeddingTable& table);

// s_j = w_0^T A w_j including the token part.
std::vector<double> raw_scores(const GeneralAttentionMatrix& head, const BitString& x,
                               const EmbeddingTable& table);

// Overflow-safe softmax (max subtraction); tau <= 0 is a domain error.
std::vector<double> softmax_scores(std::span<const double> s, double tau);

// argmax with ties broken to the smallest position; returns a 1-based position.
int hard_argmax(std::span<const double> s);

AttentionMap attention_map(const AttentionHeads& heads, const EmbeddingTable& table);

// Pooled attention vector v* = (1/m) sum_i v_i. Soft mode pools positions
// 1..n with softmax weights; hard mode copies each head's argmax embedding.
Vec4 attention_vector(const AttentionHeads& heads, const BitString& x, const EmbeddingTable& table);
Vec4 attention_vector(std::span<const GeneralAttentionMatrix> heads, AttentionMode mode, double tau,
                      const BitString& x, const EmbeddingTable& table);

// Positions ranked by w_0^T A f'_pos(j), descending; ties to the smaller position.
std::vector<int> head_permutation(const GeneralAttentionMatrix& head, const EmbeddingTable& table);

// Token value the head scores highest; ties resolve to 0.
int token_maximizer(const GeneralAttentionMatrix& head, const EmbeddingTable& table);

// A position outside every head's length-(ceil((n-1)/m)-1) ranking prefix,
// taken from the tail of head 1's ranking (lowest-ranked match). Existence is
// guaranteed by counting.
int adversarial_position(std::span<const GeneralAttentionMatrix> heads, const EmbeddingTable& table);

// (1 - 2m/2^ceil((n-1)/(5m))) * (1 - |alpha||beta| * 5m^2/n)^2, clamped at 0
// when either factor is negative.
double theorem2_bound(int n, int m, double alpha_norm, double beta_norm);

}  // namespace paritylab
