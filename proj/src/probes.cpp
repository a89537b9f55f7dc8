#include "paritylab/probes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "paritylab/rng.hpp"

namespace paritylab {

namespace {

AttentionHeads heads_from_flat(std::span<const double> flat, double tau) {
    AttentionHeads heads;
    heads.tau = tau;
    heads.params.resize(flat.size() / 2);
    for (std::size_t i = 0; i < heads.params.size(); ++i) {
        heads.params[i] = {flat[2 * i], flat[2 * i + 1]};
    }
    return heads;
}

double vstar1_soft(const AttentionHeads& heads, const BitString& x, const EmbeddingTable& table) {
    double v1 = 0.0;
    for (const auto& head : heads.params) {
        const auto gamma = softmax_scores(raw_scores(head, table), heads.tau);
        for (int p = 1; p <= table.n; ++p) {
            if (x.bit(p)) v1 += gamma[static_cast<std::size_t>(p - 1)];
        }
    }
    return v1 / heads.count();
}

double yhat_soft(std::span<const double> flat, double tau, const FixedTelescopingHead& clf,
                 const BitString& x, const EmbeddingTable& table) {
    return fixed_head_forward(vstar1_soft(heads_from_flat(flat, tau), x, table), clf);
}

std::vector<double> yhat_grad(std::span<const double> flat, double tau,
                              const FixedTelescopingHead& clf, const BitString& x,
                              const EmbeddingTable& table) {
    return yhat_attention_gradient(heads_from_flat(flat, tau), clf, x, table);
}

double norm_of_diff(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

std::vector<double> sample_flat(Rng& rng, int k) {
    std::vector<double> flat(2 * static_cast<std::size_t>(k));
    for (double& v : flat) v = rng.uniform(-2.0, 2.0);
    return flat;
}

// Either an independent redraw or a perturbation at a random scale, so both
// far and near pairs feed the worst-case ratio.
std::vector<double> sample_partner(Rng& rng, std::span<const double> base) {
    std::vector<double> flat(base.begin(), base.end());
    if (rng.uniform01() < 0.5) {
        for (double& v : flat) v = rng.uniform(-2.0, 2.0);
    } else {
        const double scale = std::pow(10.0, rng.uniform(-4.0, 0.0));
        for (double& v : flat) v += scale * rng.uniform(-1.0, 1.0);
    }
    return flat;
}

BitString sample_input(Rng& rng, int n) {
    return BitString(static_cast<std::uint32_t>(rng.below(input_count(n))), n);
}

}  // namespace

ProbeReport lipschitz_probe_yhat(const ParitySpec& spec, double tau, double b_sigma, int trials,
                                 std::uint64_t seed) {
    const int k = spec.k();
    const EmbeddingTable table(spec.n);
    const FixedTelescopingHead clf{k, b_sigma};
    Rng rng(seed);

    double observed = 0.0;
    for (int t = 0; t < trials; ++t) {
        const auto a = sample_flat(rng, k);
        const auto b = sample_partner(rng, a);
        const double dist = norm_of_diff(a, b);
        if (dist < 1e-8) continue;
        const BitString x = sample_input(rng, spec.n);
        const double dy = std::abs(yhat_soft(a, tau, clf, x, table) - yhat_soft(b, tau, clf, x, table));
        observed = std::max(observed, dy / dist);
    }
    const double bound = 8.0 * k * k / tau * std::sqrt(2.0 * k);
    return {"lipschitz_yhat", trials, observed, bound, observed <= bound * (1.0 + 1e-6)};
}

ProbeReport lipschitz_partial_probe(const ParitySpec& spec, double tau, double b_sigma, int trials,
                                    std::uint64_t seed) {
    const int k = spec.k();
    const EmbeddingTable table(spec.n);
    const FixedTelescopingHead clf{k, b_sigma};
    Rng rng(seed);

    double observed = 0.0;
    for (int t = 0; t < trials; ++t) {
        auto a = sample_flat(rng, k);
        const BitString x = sample_input(rng, spec.n);
        const std::size_t coord = static_cast<std::size_t>(rng.below(a.size()));
        const double h = 1e-6 * std::pow(10.0, rng.uniform(0.0, 2.0));
        const double y0 = yhat_soft(a, tau, clf, x, table);
        a[coord] += h;
        const double y1 = yhat_soft(a, tau, clf, x, table);
        observed = std::max(observed, std::abs(y1 - y0) / h);
    }
    const double bound = 8.0 * k * k / tau;
    return {"lipschitz_yhat_partial", trials, observed, bound, observed <= bound * (1.0 + 1e-6)};
}

ProbeReport smoothness_probe(const ParitySpec& spec, double tau, double b_sigma, int trials,
                             std::uint64_t seed) {
    const int k = spec.k();
    const EmbeddingTable table(spec.n);
    const FixedTelescopingHead clf{k, b_sigma};
    Rng rng(seed);

    double observed = 0.0;
    for (int t = 0; t < trials; ++t) {
        const auto a = sample_flat(rng, k);
        const auto b = sample_partner(rng, a);
        const double dist = norm_of_diff(a, b);
        if (dist < 1e-8) continue;
        const BitString x = sample_input(rng, spec.n);
        const auto ga = yhat_grad(a, tau, clf, x, table);
        const auto gb = yhat_grad(b, tau, clf, x, table);
        observed = std::max(observed, norm_of_diff(ga, gb) / dist);
    }
    const double bound = 2.0 * k * (20.0 / (tau * tau) + 32.0 * k * k / (tau * tau * std::sqrt(b_sigma)));
    return {"smoothness_yhat", trials, observed, bound, observed <= bound * (1.0 + 1e-6)};
}

ProbeReport smoothness_partial_probe(const ParitySpec& spec, double tau, double b_sigma, int trials,
                                     std::uint64_t seed) {
    const int k = spec.k();
    const EmbeddingTable table(spec.n);
    const FixedTelescopingHead clf{k, b_sigma};
    Rng rng(seed);

    double observed = 0.0;
    for (int t = 0; t < trials; ++t) {
        auto a = sample_flat(rng, k);
        const BitString x = sample_input(rng, spec.n);
        const std::size_t coord = static_cast<std::size_t>(rng.below(a.size()));
        const double h = 1e-5;
        const auto g0 = yhat_grad(a, tau, clf, x, table);
        a[coord] += h;
        const auto g1 = yhat_grad(a, tau, clf, x, table);
        observed = std::max(observed, std::abs(g1[coord] - g0[coord]) / h);
    }
    const double bound = 20.0 / (tau * tau) + 32.0 * k * k / (tau * tau * std::sqrt(b_sigma));
    return {"smoothness_yhat_partial", trials, observed, bound, observed <= bound * (1.0 + 1e-6)};
}

ProbeReport ygrady_lipschitz_probe(const ParitySpec& spec, double tau, double b_sigma, int trials,
                                   std::uint64_t seed) {
    const int k = spec.k();
    const EmbeddingTable table(spec.n);
    const FixedTelescopingHead clf{k, b_sigma};
    Rng rng(seed);

    const double premise = 4.0 * k * k * k;  // |yhat| cap assumed by the bound
    bool premise_ok = true;
    double observed = 0.0;
    for (int t = 0; t < trials; ++t) {
        const auto a = sample_flat(rng, k);
        const auto b = sample_partner(rng, a);
        const double dist = norm_of_diff(a, b);
        if (dist < 1e-8) continue;
        const BitString x = sample_input(rng, spec.n);
        const double ya = yhat_soft(a, tau, clf, x, table);
        const double yb = yhat_soft(b, tau, clf, x, table);
        premise_ok = premise_ok && std::abs(ya) <= premise && std::abs(yb) <= premise;
        auto ga = yhat_grad(a, tau, clf, x, table);
        auto gb = yhat_grad(b, tau, clf, x, table);
        for (double& g : ga) g *= ya;
        for (double& g : gb) g *= yb;
        observed = std::max(observed, norm_of_diff(ga, gb) / dist);
    }
    const double smooth = 20.0 / (tau * tau) + 32.0 * k * k / (tau * tau * std::sqrt(b_sigma));
    const double lip = 8.0 * k * k / tau;
    const double bound = std::sqrt(2.0 * k) * (4.0 * k * k * k * smooth + lip * lip);
    return {"lipschitz_ygrady", trials, observed, bound,
            premise_ok && observed <= bound * (1.0 + 1e-6)};
}

namespace {

// Per-input, per-head loss gradient [dl/da13^(i), dl/da14^(i)] laid out as a
// flat 2k vector.
std::vector<double> per_input_loss_grad(const AttentionHeads& heads, const FixedTelescopingHead& clf,
                                        const ParitySpec& spec, const BitString& x,
                                        const EmbeddingTable& table) {
    const double v1 = vstar1_soft(heads, x, table);
    const double yhat = fixed_head_forward(v1, clf);
    const int y = parity_label(x, spec);
    std::vector<double> grad(2 * static_cast<std::size_t>(heads.count()), 0.0);
    if (y * yhat < 1.0) {
        grad = yhat_attention_gradient(heads, clf, x, table);
        const double dl = 2.0 * (yhat - y);
        for (double& g : grad) g *= dl;
    }
    return grad;
}

}  // namespace

ProbeReport grad_correlation_probe(const AttentionHeads& heads, const FixedTelescopingHead& clf,
                                   const ParitySpec& spec, std::uint64_t seed, long sample_pairs) {
    if (heads.tau > 2.0 / spec.n + 1e-12) {
        throw std::invalid_argument("grad_correlation_probe: requires tau <= 2/n");
    }
    const EmbeddingTable table(spec.n);
    const int k = heads.count();

    double observed = std::numeric_limits<double>::infinity();
    long pairs = 0;
    auto correlate = [&](std::span<const double> ga, std::span<const double> gb) {
        for (int i = 0; i < k; ++i) {
            const double dot = ga[2 * static_cast<std::size_t>(i)] * gb[2 * static_cast<std::size_t>(i)] +
                               ga[2 * static_cast<std::size_t>(i) + 1] * gb[2 * static_cast<std::size_t>(i) + 1];
            observed = std::min(observed, dot);
        }
        ++pairs;
    };

    if (spec.n <= 10) {
        const std::uint64_t total = input_count(spec.n);
        std::vector<std::vector<double>> grads(total);
        for (std::uint64_t w = 0; w < total; ++w) {
            grads[w] = per_input_loss_grad(heads, clf, spec, BitString(static_cast<std::uint32_t>(w), spec.n), table);
        }
        for (std::uint64_t a = 0; a < total; ++a) {
            for (std::uint64_t b = a + 1; b < total; ++b) correlate(grads[a], grads[b]);
        }
    } else {
        Rng rng(seed);
        for (long t = 0; t < sample_pairs; ++t) {
            const BitString xa = sample_input(rng, spec.n);
            const BitString xb = sample_input(rng, spec.n);
            if (xa.word() == xb.word()) continue;
            correlate(per_input_loss_grad(heads, clf, spec, xa, table),
                      per_input_loss_grad(heads, clf, spec, xb, table));
        }
    }
    if (pairs == 0) observed = 0.0;
    const double bound = -1e-9;
    return {"grad_correlation", pairs, observed, bound, observed >= bound};
}

ProbeReport pl_constant_probe(const TrajectoryLog& trajectory, int n, int k, double tau,
                              double epsilon, double c2) {
    if (trajectory.steps.empty()) throw std::invalid_argument("pl_constant_probe: empty trajectory");
    double observed = std::numeric_limits<double>::infinity();
    long samples = 0;
    for (const auto& row : trajectory.steps) {
        if (row.risk < epsilon) continue;  // pl_ratio degenerates to 0/0 at the minimum
        observed = std::min(observed, row.pl_ratio);
        ++samples;
    }
    if (samples == 0) observed = std::numeric_limits<double>::infinity();
    const double mu1 = 2.0 * c2 * c2 * tau * tau / (static_cast<double>(n) * n);
    const double mu2 = 64.0 * k * k * c2 * c2 / (static_cast<double>(n) * n);
    const double bound = std::ldexp(std::min(64.0 * mu1, mu2), -(n + 1));
    return {"pl_ratio_min", samples, observed, bound, samples == 0 || observed > 0.0};
}

double measure_c2(const AttentionHeads& heads, const EmbeddingTable& table) {
    double c2 = std::numeric_limits<double>::infinity();
    for (const auto& head : heads.params) {
        const auto gamma = softmax_scores(raw_scores(head, table), heads.tau);
        const int top = hard_argmax(gamma);
        const int left = top == 1 ? table.n : top - 1;
        const int right = top == table.n ? 1 : top + 1;
        const double neighbor = std::min(gamma[static_cast<std::size_t>(left - 1)],
                                         gamma[static_cast<std::size_t>(right - 1)]);
        c2 = std::min(c2, neighbor / heads.tau);
    }
    return c2;
}

SoftHardReport soft_to_hard_check(const AttentionHeads& heads, const FixedTelescopingHead& clf,
                                  const ParitySpec& spec, double epsilon) {
    const EmbeddingTable table(spec.n);
    SoftHardReport report;
    report.soft_risk = expected_risk(heads, clf, spec);
    AttentionHeads hard = heads;
    hard.mode = AttentionMode::hard;
    report.hard_risk = expected_risk(hard, clf, spec);

    const AttentionMap map = attention_map(heads, table);
    for (int i = 1; i <= map.m; ++i) {
        HeadAttentionSummary row;
        row.head = i;
        row.argmax_pos = 1;
        for (int p = 1; p <= map.n; ++p) {
            if (map.at(i, p) > map.at(i, row.argmax_pos)) row.argmax_pos = p;
        }
        row.top_gamma = map.at(i, row.argmax_pos);
        report.heads.push_back(row);
    }

    report.covering_head.assign(spec.bits.size(), 0);
    for (std::size_t b = 0; b < spec.bits.size(); ++b) {
        for (int i = 1; i <= map.m; ++i) {
            if (map.at(i, spec.bits[b]) > 0.5) {
                report.covering_head[b] = i;
                break;
            }
        }
    }

    bool adjacent = false;
    for (std::size_t b = 0; b + 1 < spec.bits.size(); ++b) {
        if (spec.bits[b + 1] - spec.bits[b] == 1) adjacent = true;
    }
    report.applicable = !adjacent;

    if (report.applicable) {
        bool covered = true;
        for (int h : report.covering_head) covered = covered && h != 0;
        report.pass = covered && report.hard_risk < epsilon;
        return report;
    }

    // Neighboring-bit regime: look for heads aligned with each pair midpoint.
    const double tolerance = 2.0 * std::numbers::pi * 0.75 / spec.n;
    for (std::size_t b = 0; b + 1 < spec.bits.size(); ++b) {
        if (spec.bits[b + 1] - spec.bits[b] != 1) continue;
        const double mid_angle = 2.0 * std::numbers::pi * (spec.bits[b] + 0.5) / spec.n;
        bool matched = false;
        for (const auto& head : heads.params) {
            double diff = std::atan2(head[0], head[1]) - mid_angle;
            diff = std::remainder(diff, 2.0 * std::numbers::pi);
            if (std::abs(diff) <= tolerance) matched = true;
        }
        report.midpoint_angles.push_back(mid_angle);
        report.midpoint_matched.push_back(matched);
    }
    report.pass = std::all_of(report.midpoint_matched.begin(), report.midpoint_matched.end(),
                              [](bool v) { return v; });
    return report;
}

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

struct CertificateSetup {
    EmbeddingTable table;
    std::vector<std::vector<int>> perms;
    std::vector<int> maximizers;
    int prefix_len = 0;
    int position = 0;

    CertificateSetup(std::span<const GeneralAttentionMatrix> heads, int n) : table(n) {
        const int m = static_cast<int>(heads.size());
        prefix_len = ceil_div(n - 1, m) - 1;
        for (const auto& h : heads) {
            perms.push_back(head_permutation(h, table));
            maximizers.push_back(token_maximizer(h, table));
        }
        position = adversarial_position(heads, table);
    }
};

}  // namespace

bool xprime_member_exists(const BitString& x, std::span<const GeneralAttentionMatrix> heads,
                          std::span<const std::vector<int>> perms, std::span<const int> maximizers,
                          int prefix_len) {
    for (std::size_t i = 0; i < heads.size(); ++i) {
        bool found = false;
        for (int r = 0; r < prefix_len && !found; ++r) {
            found = x.bit(perms[i][static_cast<std::size_t>(r)]) == maximizers[i];
        }
        if (!found) return false;
    }
    return true;
}

bool xprime_member_count(const BitString& x, std::span<const GeneralAttentionMatrix> heads,
                         std::span<const std::vector<int>> perms, std::span<const int> maximizers,
                         int prefix_len, double threshold) {
    for (std::size_t i = 0; i < heads.size(); ++i) {
        int count = 0;
        for (int r = 0; r < prefix_len; ++r) {
            count += x.bit(perms[i][static_cast<std::size_t>(r)]) == maximizers[i];
        }
        if (count < threshold) return false;
    }
    return true;
}

CertificateReport corollary20_certificate(std::span<const GeneralAttentionMatrix> heads, int n) {
    if (n > 14) throw std::length_error("corollary20_certificate: exhaustive scan capped at n = 14");
    const int m = static_cast<int>(heads.size());
    const CertificateSetup setup(heads, n);
    const int p = setup.position;

    std::uint64_t members = 0;
    std::uint64_t violations = 0;
    for_each_input(n, [&](const BitString& x) {
        if (!xprime_member_exists(x, heads, setup.perms, setup.maximizers, setup.prefix_len)) return;
        ++members;
        const BitString flipped = flip_bit(x, p);
        for (const auto& h : heads) {
            const int sel = hard_argmax(raw_scores(h, x, setup.table));
            const int sel_flipped = hard_argmax(raw_scores(h, flipped, setup.table));
            if (sel != sel_flipped) {
                ++violations;
                break;
            }
        }
    });

    const double total = static_cast<double>(input_count(n));
    CertificateReport report;
    report.position = p;
    const double invariant_fraction =
        members > 0 ? static_cast<double>(members - violations) / members : 1.0;
    report.flip_invariance = {"corollary20_flip", static_cast<long>(members), invariant_fraction, 1.0,
                              violations == 0};
    const double coverage = static_cast<double>(members) / total;
    const double coverage_bound = 1.0 - 2.0 * m * std::pow(2.0, -ceil_div(n - 1, m));
    report.coverage = {"corollary20_coverage", static_cast<long>(members), coverage, coverage_bound,
                       coverage >= coverage_bound};
    return report;
}

CertificateReport theorem2_census(std::span<const GeneralAttentionMatrix> heads, int n) {
    if (n > 14) throw std::length_error("theorem2_census: exhaustive census capped at n = 14");
    const int m = static_cast<int>(heads.size());
    const CertificateSetup setup(heads, n);
    const int p = setup.position;
    const double threshold = static_cast<double>(n) / (5.0 * m);

    std::uint64_t members = 0;
    double max_gamma_p = 0.0;
    for_each_input(n, [&](const BitString& x) {
        if (!xprime_member_count(x, heads, setup.perms, setup.maximizers, setup.prefix_len, threshold)) {
            return;
        }
        ++members;
        for (const auto& h : heads) {
            const auto gamma = softmax_scores(raw_scores(h, x, setup.table), 1.0);
            max_gamma_p = std::max(max_gamma_p, gamma[static_cast<std::size_t>(p - 1)]);
        }
    });

    const double total = static_cast<double>(input_count(n));
    CertificateReport report;
    report.position = p;
    const double coverage = static_cast<double>(members) / total;
    const double coverage_bound = 1.0 - 2.0 * m * std::pow(2.0, -ceil_div(n - 1, 5 * m));
    report.coverage = {"theorem2_coverage", static_cast<long>(members), coverage, coverage_bound,
                       coverage >= coverage_bound};
    const double cap = 1.0 / (threshold + 1.0);
    report.score_cap = {"theorem2_score_cap", static_cast<long>(members), max_gamma_p, cap,
                        max_gamma_p <= cap * (1.0 + 1e-12)};
    return report;
}

}  // namespace paritylab
