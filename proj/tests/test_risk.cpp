#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "paritylab/risk.hpp"
#include "paritylab/rng.hpp"

using namespace paritylab;

namespace {

// Independent risk oracle: per-input forward pass written directly from the
// architecture definition, naive softmax, serial summation. Kept free of the
// library's evaluation path (context precompute, blocked reduction).
double oracle_risk(const AttentionHeads& heads, const FixedTelescopingHead& clf,
                   const ParitySpec& spec) {
    const int n = spec.n;
    const int k = heads.count();
    double total = 0.0;
    for (std::uint32_t w = 0; w < (1u << n); ++w) {
        double vstar1 = 0.0;
        for (const auto& head : heads.params) {
            std::vector<double> weight(static_cast<std::size_t>(n));
            double z = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double angle = 2.0 * std::numbers::pi * j / n;
                const double s = head[0] * std::sin(angle) + head[1] * std::cos(angle);
                weight[static_cast<std::size_t>(j - 1)] = std::exp(s / heads.tau);
                z += weight[static_cast<std::size_t>(j - 1)];
            }
            for (int j = 1; j <= n; ++j) {
                const double bit = (w >> (j - 1)) & 1u;
                vstar1 += weight[static_cast<std::size_t>(j - 1)] / z * bit;
            }
        }
        vstar1 /= k;

        double yhat = 1.0;
        for (int i = 1; i <= k; ++i) {
            const double arg = k * vstar1 + 0.5 - i;
            const double sigma = 0.5 * (arg + std::sqrt(arg * arg + clf.b_sigma));
            yhat += (i % 2 ? -1.0 : 1.0) * (8.0 * i - 4.0) * sigma;
        }

        int parity = 0;
        for (int b : spec.bits) parity ^= static_cast<int>((w >> (b - 1)) & 1u);
        const double y = parity ? -1.0 : 1.0;
        const double margin = 1.0 - y * yhat;
        total += margin > 0.0 ? margin * margin : 0.0;
    }
    return total / static_cast<double>(1u << n);
}

}  // namespace

TEST_CASE("init_heads draws unit vectors deterministically") {
    const auto heads = init_heads(5, 99);
    for (const auto& u : heads.params) {
        CHECK(std::abs(std::sqrt(u[0] * u[0] + u[1] * u[1]) - 1.0) < 1e-12);
    }
    const auto again = init_heads(5, 99);
    for (int i = 0; i < 5; ++i) {
        CHECK(heads.params[static_cast<std::size_t>(i)] == again.params[static_cast<std::size_t>(i)]);
    }
    CHECK(init_heads(5, 100).params != heads.params);
    CHECK_THROWS_AS(init_heads(0, 1), std::invalid_argument);
}

TEST_CASE("init_heads angles are uniform across quadrants") {
    int quadrant[4] = {0, 0, 0, 0};
    const auto heads = init_heads(10000, 2024);
    for (const auto& u : heads.params) {
        const int q = (u[0] >= 0 ? 0 : 1) + (u[1] >= 0 ? 0 : 2);
        ++quadrant[q];
    }
    for (int q = 0; q < 4; ++q) {
        CHECK(quadrant[q] > 2300);
        CHECK(quadrant[q] < 2700);
    }
}

TEST_CASE("expected risk of the aligned hard-attention model is zero") {
    const auto spec = ParitySpec::make(10, {2, 6, 9});
    const EmbeddingTable table(10);
    AttentionHeads heads;
    heads.mode = AttentionMode::hard;
    heads.tau = 0.1;
    for (int b : spec.bits) heads.params.push_back({table.sin_at(b), table.cos_at(b)});
    const FixedTelescopingHead clf{3, 1e-8};
    CHECK(expected_risk(heads, clf, spec) < 1e-6);
}

TEST_CASE("constant zero predictor has risk exactly 1") {
    const auto spec = ParitySpec::make(8, {3, 4});
    std::vector<GeneralAttentionMatrix> heads(2);
    heads[0].a[0][2] = 0.4;
    heads[1].a[0][3] = -0.9;
    const auto net = TrainableFFNN1::zeros(4);
    CHECK(expected_risk(heads, AttentionMode::soft, 0.3, net, spec) == 1.0);
    CHECK(expected_risk(heads, AttentionMode::hard, 0.3, net, spec) == 1.0);
}

TEST_CASE("pinned regression risk, implementation vs oracle") {
    const auto spec = ParitySpec::make(8, {2, 5});
    AttentionHeads heads = init_heads(2, 0, 0.05);
    const FixedTelescopingHead clf{2, 1e-6};

    const double via_impl = expected_risk(heads, clf, spec);
    const double via_oracle = oracle_risk(heads, clf, spec);
    CHECK(std::abs(via_impl - via_oracle) < 1e-12);

    // Frozen once from the oracle; guards the whole forward path.
    const double pinned = 0.97858563462713953;
    CHECK(std::abs(via_oracle - pinned) < 1e-12);
    CHECK(std::abs(via_impl - pinned) < 1e-12);
}

TEST_CASE("risk evaluation is thread-count invariant, bit for bit") {
    const auto spec = ParitySpec::make(13, {1, 7, 11});
    AttentionHeads heads = init_heads(3, 5, 2.0 / 13);
    const FixedTelescopingHead clf{3, 1e-6};
    const auto serial = risk_and_attention_gradient(heads, clf, spec, 1);
    const auto threaded = risk_and_attention_gradient(heads, clf, spec, 4);
    CHECK(serial.risk == threaded.risk);
    REQUIRE(serial.grad.size() == threaded.grad.size());
    for (std::size_t i = 0; i < serial.grad.size(); ++i) CHECK(serial.grad[i] == threaded.grad[i]);
}

TEST_CASE("gradient vanishes at a margin minimum") {
    // n = k = 1 with vanishing smoothing: yhat is exactly +1 or -1, both at
    // margin, so the hinge indicator is inactive on every input.
    const auto spec = ParitySpec::make(1, {1});
    AttentionHeads heads = init_heads(1, 3, 0.5);
    const FixedTelescopingHead clf{1, 1e-30};
    const auto report = risk_and_attention_gradient(heads, clf, spec);
    CHECK(report.risk == 0.0);
    for (double g : report.grad) CHECK(g == 0.0);
}

TEST_CASE("yhat gradient vanishes on the all-ones input") {
    // sum_p gamma_p (f_p - mean f) telescopes to zero when every bit is set
    const int n = 9;
    const EmbeddingTable table(n);
    const BitString ones((1u << n) - 1, n);
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        AttentionHeads heads = init_heads(2, seed, 0.3);
        const auto grad = yhat_attention_gradient(heads, FixedTelescopingHead{2, 1e-6}, ones, table);
        for (double g : grad) CHECK(std::abs(g) < 1e-14);
    }
}

TEST_CASE("finite differences calibrate on a quadratic") {
    const auto fd = finite_difference_gradient(
        [](std::span<const double> p) {
            double s = 0.0;
            for (double v : p) s += v * v;
            return s;
        },
        std::vector<double>{0.3, -1.5, 2.0}, 1e-6);
    CHECK(fd[0] == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(fd[1] == doctest::Approx(-3.0).epsilon(1e-9));
    CHECK(fd[2] == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("analytic attention gradient matches finite differences") {
    Rng rng(77);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 5 + static_cast<int>(rng.below(4));
        const int k = 1 + static_cast<int>(rng.below(3));
        const auto spec = ParitySpec::random(n, std::min(k, n), 50 + trial);
        const double tau = (trial % 3 == 0) ? 0.5 : (trial % 3 == 1 ? 0.1 : 2.0 / n);
        AttentionHeads heads = init_heads(spec.k(), 900 + trial, tau);
        const FixedTelescopingHead clf{spec.k(), 1e-6};

        const auto analytic = analytic_attention_gradient(heads, clf, spec);
        const auto fd = fd_attention_gradient(heads, clf, spec, 1e-6);
        REQUIRE(analytic.size() == fd.size());
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            const double err = std::abs(analytic[i] - fd[i]);
            REQUIRE(err <= std::max(1e-8, 1e-5 * std::max(std::abs(analytic[i]), std::abs(fd[i]))));
        }
    }
}

TEST_CASE("analytic gradient rejects hard mode") {
    const auto spec = ParitySpec::make(4, {2});
    AttentionHeads heads = init_heads(1, 1, 0.5, AttentionMode::hard);
    CHECK_THROWS_AS(analytic_attention_gradient(heads, FixedTelescopingHead{1, 1e-6}, spec),
                    std::invalid_argument);
}

TEST_CASE("training returns immediately when epsilon is trivial") {
    TrainConfig config;
    config.epsilon = 2.0;
    config.tau = 0.25;
    config.epochs = 50;
    const auto spec = ParitySpec::make(8, {2, 5});
    const auto [log, heads] = gd_train_attention(config, spec);
    CHECK(log.status == TrainStatus::converged);
    CHECK(log.updates == 0);
    CHECK(log.steps.size() == 1);
}

TEST_CASE("training descends monotonically and is deterministic") {
    TrainConfig config;
    config.tau = 0.25;
    config.epochs = 40;
    config.epsilon = 1e-4;
    config.seed = 3;
    const auto spec = ParitySpec::make(8, {2, 5});

    const auto [log, heads] = gd_train_attention(config, spec);
    for (std::size_t t = 1; t < log.steps.size(); ++t) {
        REQUIRE(log.steps[t].risk <= log.steps[t - 1].risk + 1e-12);
    }

    const auto [log2, heads2] = gd_train_attention(config, spec);
    REQUIRE(log2.steps.size() == log.steps.size());
    for (std::size_t t = 0; t < log.steps.size(); ++t) {
        REQUIRE(log2.steps[t].risk == log.steps[t].risk);
        REQUIRE(log2.steps[t].grad_norm == log.steps[t].grad_norm);
    }
    for (int i = 0; i < heads.count(); ++i) {
        REQUIRE(heads.params[static_cast<std::size_t>(i)] == heads2.params[static_cast<std::size_t>(i)]);
    }

    TrainConfig threaded = config;
    threaded.threads = 4;
    const auto [log4, heads4] = gd_train_attention(threaded, spec);
    REQUIRE(log4.steps.size() == log.steps.size());
    for (std::size_t t = 0; t < log.steps.size(); ++t) {
        REQUIRE(log4.steps[t].risk == log.steps[t].risk);
    }
}

TEST_CASE("small attention training run converges") {
    TrainConfig config;
    config.tau = 0.25;  // 2/n for n = 8
    config.epochs = 120;
    config.epsilon = 0.01;
    config.seed = 1;
    const auto spec = ParitySpec::make(8, {2, 5});
    const auto [log, heads] = gd_train_attention(config, spec);
    CHECK(log.status == TrainStatus::converged);
    CHECK(log.final_risk < 0.01);
}

TEST_CASE("ffnn positive control learns from aligned frozen heads") {
    const auto spec = ParitySpec::make(12, {3, 8});
    const EmbeddingTable table(12);
    std::vector<GeneralAttentionMatrix> heads;
    for (int b : spec.bits) heads.push_back(GeneralAttentionMatrix::aligned_with(b, table));

    TrainConfig config;
    config.tau = 2.0 / 12;
    config.eta = 0.5;
    config.epochs = 400;
    config.epsilon = 0.02;
    config.seed = 7;
    const auto [log, net] = gd_train_ffnn(config, spec, heads, AttentionMode::soft, 8);
    CHECK(log.final_risk < 0.05);
}

TEST_CASE("ffnn training respects the norm cap") {
    const auto spec = ParitySpec::make(8, {1, 6});
    std::vector<GeneralAttentionMatrix> heads(2);
    heads[0].a[0][2] = 1.0;
    heads[1].a[0][0] = 0.5;
    TrainConfig config;
    config.tau = 0.25;
    config.epochs = 30;
    config.epsilon = 1e-9;
    const double cap = 0.8;
    const auto [log, net] = gd_train_ffnn(config, spec, heads, AttentionMode::soft, 4, cap);
    CHECK(net.alpha_norm() * net.beta_norm() <= cap + 1e-9);
    for (const auto& row : log.steps) {
        REQUIRE(row.alpha_norm * row.beta_norm <= cap + 1e-9);
    }
}
