#include "paritylab/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace paritylab {

std::vector<double> raw_scores(const std::array<double, 2>& head, const EmbeddingTable& table) {
    std::vector<double> s(static_cast<std::size_t>(table.n));
    for (int j = 1; j <= table.n; ++j) {
        s[static_cast<std::size_t>(j - 1)] = head[0] * table.sin_at(j) + head[1] * table.cos_at(j);
    }
    return s;
}

std::vector<double> raw_scores(const GeneralAttentionMatrix& head, const BitString& x,
                               const EmbeddingTable& table) {
    if (x.size() != table.n) throw std::invalid_argument("raw_scores: length mismatch");
    std::vector<double> s(static_cast<std::size_t>(table.n));
    for (int j = 1; j <= table.n; ++j) {
        s[static_cast<std::size_t>(j - 1)] = head.score(x.bit(j), table.sin_at(j), table.cos_at(j));
    }
    return s;
}

std::vector<double> softmax_scores(std::span<const double> s, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("softmax_scores: tau must be > 0");
    const double top = *std::max_element(s.begin(), s.end());
    std::vector<double> g(s.size());
    double total = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        g[j] = std::exp((s[j] - top) / tau);
        total += g[j];
    }
    for (double& v : g) v /= total;
    return g;
}

int hard_argmax(std::span<const double> s) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < s.size(); ++j) {
        if (s[j] > s[best]) best = j;
    }
    return static_cast<int>(best) + 1;
}

AttentionMap attention_map(const AttentionHeads& heads, const EmbeddingTable& table) {
    AttentionMap map;
    map.m = heads.count();
    map.n = table.n;
    map.gamma.reserve(static_cast<std::size_t>(map.m) * map.n);
    for (const auto& head : heads.params) {
        const auto g = softmax_scores(raw_scores(head, table), heads.tau);
        map.gamma.insert(map.gamma.end(), g.begin(), g.end());
    }
    return map;
}

Vec4 attention_vector(const AttentionHeads& heads, const BitString& x, const EmbeddingTable& table) {
    if (x.size() != table.n) throw std::invalid_argument("attention_vector: length mismatch");
    Vec4 vstar{0.0, 0.0, 0.0, 0.0};
    for (const auto& head : heads.params) {
        const auto s = raw_scores(head, table);
        if (heads.mode == AttentionMode::hard) {
            const int j = hard_argmax(s);
            const Vec4 w = table.token_embedding(x.bit(j), j);
            for (int d = 0; d < 4; ++d) vstar[static_cast<std::size_t>(d)] += w[static_cast<std::size_t>(d)];
        } else {
            const auto g = softmax_scores(s, heads.tau);
            for (int j = 1; j <= table.n; ++j) {
                const Vec4 w = table.token_embedding(x.bit(j), j);
                for (int d = 0; d < 4; ++d) {
                    vstar[static_cast<std::size_t>(d)] += g[static_cast<std::size_t>(j - 1)] * w[static_cast<std::size_t>(d)];
                }
            }
        }
    }
    for (double& v : vstar) v /= heads.count();
    return vstar;
}

Vec4 attention_vector(std::span<const GeneralAttentionMatrix> heads, AttentionMode mode, double tau,
                      const BitString& x, const EmbeddingTable& table) {
    if (heads.empty()) throw std::invalid_argument("attention_vector: no heads");
    Vec4 vstar{0.0, 0.0, 0.0, 0.0};
    for (const auto& head : heads) {
        const auto s = raw_scores(head, x, table);
        if (mode == AttentionMode::hard) {
            const int j = hard_argmax(s);
            const Vec4 w = table.token_embedding(x.bit(j), j);
            for (int d = 0; d < 4; ++d) vstar[static_cast<std::size_t>(d)] += w[static_cast<std::size_t>(d)];
        } else {
            const auto g = softmax_scores(s, tau);
            for (int j = 1; j <= table.n; ++j) {
                const Vec4 w = table.token_embedding(x.bit(j), j);
                for (int d = 0; d < 4; ++d) {
                    vstar[static_cast<std::size_t>(d)] += g[static_cast<std::size_t>(j - 1)] * w[static_cast<std::size_t>(d)];
                }
            }
        }
    }
    for (double& v : vstar) v /= static_cast<double>(heads.size());
    return vstar;
}

std::vector<int> head_permutation(const GeneralAttentionMatrix& head, const EmbeddingTable& table) {
    std::vector<int> perm(static_cast<std::size_t>(table.n));
    std::iota(perm.begin(), perm.end(), 1);
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
        const double sa = head.pos_score(table.sin_at(a), table.cos_at(a));
        const double sb = head.pos_score(table.sin_at(b), table.cos_at(b));
        if (sa != sb) return sa > sb;
        return a < b;  // ties: smaller position ranks first
    });
    return perm;
}

int token_maximizer(const GeneralAttentionMatrix& head, const EmbeddingTable&) {
    const double s1 = head.a[0][0];  // w_0^T A f'_emb(1)
    const double s0 = head.a[0][1];  // w_0^T A f'_emb(0)
    return s1 > s0 ? 1 : 0;          // ties resolve to 0
}

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

int adversarial_position(std::span<const GeneralAttentionMatrix> heads, const EmbeddingTable& table) {
    const int n = table.n;
    const int m = static_cast<int>(heads.size());
    if (m < 1 || n < 2) throw std::invalid_argument("adversarial_position: need m >= 1, n >= 2");
    const int prefix_len = ceil_div(n - 1, m) - 1;

    std::vector<std::vector<int>> perms;
    perms.reserve(heads.size());
    for (const auto& h : heads) perms.push_back(head_permutation(h, table));

    std::vector<char> in_prefix(static_cast<std::size_t>(m) * (n + 1), 0);
    for (int i = 0; i < m; ++i) {
        for (int r = 0; r < prefix_len; ++r) {
            in_prefix[static_cast<std::size_t>(i) * (n + 1) + perms[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)]] = 1;
        }
    }

    // Scan head 1's tail from the lowest rank upward.
    for (int r = n - 1; r >= prefix_len; --r) {
        const int p = perms[0][static_cast<std::size_t>(r)];
        bool ok = true;
        for (int i = 0; i < m && ok; ++i) {
            ok = !in_prefix[static_cast<std::size_t>(i) * (n + 1) + p];
        }
        if (ok) return p;
    }
    throw std::logic_error("adversarial_position: no position found");  // unreachable by counting
}

double theorem2_bound(int n, int m, double alpha_norm, double beta_norm) {
    if (n < 1 || m < 1) throw std::invalid_argument("theorem2_bound: n, m must be >= 1");
    if (alpha_norm < 0.0 || beta_norm < 0.0) throw std::invalid_argument("theorem2_bound: norms must be >= 0");
    const int exponent = ceil_div(n - 1, 5 * m);
    const double f1 = 1.0 - 2.0 * m * std::pow(2.0, -exponent);
    const double f2 = 1.0 - alpha_norm * beta_norm * 5.0 * m * m / n;
    if (f1 <= 0.0 || f2 <= 0.0) return 0.0;
    return f1 * f2 * f2;
}

}  // namespace paritylab
