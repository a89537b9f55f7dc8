#include "paritylab/risk.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "paritylab/reduce.hpp"
#include "paritylab/rng.hpp"

namespace paritylab {

namespace {

// Input-independent per-step state for the positional-head model: raw scores
// do not depend on the bits, so the softmax and the gradient coefficient
// vectors are shared by all 2^n inputs.
struct AttnContext {
    int n = 0;
    int k = 0;
    std::uint32_t parity_mask = 0;
    FixedTelescopingHead clf;
    bool hard = false;
    std::vector<double> coeff;  // n: coefficient of x_p in v*_1 (soft mode)
    std::vector<int> selected;  // k: per-head argmax position (hard mode)
    std::vector<double> d13;    // k*n: d v*_1 / d a13^(i) coefficient of x_p
    std::vector<double> d14;

    double vstar1(std::uint32_t word) const {
        double v = 0.0;
        if (hard) {
            for (int pos : selected) v += static_cast<double>((word >> (pos - 1)) & 1u);
            return v / k;
        }
        for (std::uint32_t bits = word; bits; bits &= bits - 1) {
            v += coeff[static_cast<std::size_t>(std::countr_zero(bits))];
        }
        return v;
    }

    int label(std::uint32_t word) const {
        return (std::popcount(word & parity_mask) & 1) ? -1 : +1;
    }
};

AttnContext make_context(const AttentionHeads& heads, const FixedTelescopingHead& clf,
                         const ParitySpec& spec, bool with_gradient) {
    AttnContext ctx;
    ctx.n = spec.n;
    ctx.k = heads.count();
    ctx.parity_mask = spec.mask();
    ctx.clf = clf;
    ctx.hard = heads.mode == AttentionMode::hard;

    const EmbeddingTable table(spec.n);
    if (ctx.hard) {
        if (with_gradient) {
            throw std::invalid_argument("attention gradient: hard mode is not differentiable");
        }
        ctx.selected.reserve(heads.params.size());
        for (const auto& head : heads.params) {
            const auto s = raw_scores(head, table);
            ctx.selected.push_back(hard_argmax(s));
        }
        return ctx;
    }

    ctx.coeff.assign(static_cast<std::size_t>(ctx.n), 0.0);
    if (with_gradient) {
        ctx.d13.assign(static_cast<std::size_t>(ctx.k) * ctx.n, 0.0);
        ctx.d14.assign(static_cast<std::size_t>(ctx.k) * ctx.n, 0.0);
    }
    for (int i = 0; i < ctx.k; ++i) {
        const auto gamma = softmax_scores(raw_scores(heads.params[static_cast<std::size_t>(i)], table), heads.tau);
        double mean_sin = 0.0;
        double mean_cos = 0.0;
        for (int p = 0; p < ctx.n; ++p) {
            const auto sp = static_cast<std::size_t>(p);
            ctx.coeff[sp] += gamma[sp] / ctx.k;
            mean_sin += gamma[sp] * table.sin_pos[sp];
            mean_cos += gamma[sp] * table.cos_pos[sp];
        }
        if (with_gradient) {
            const double scale = 1.0 / (ctx.k * heads.tau);
            for (int p = 0; p < ctx.n; ++p) {
                const auto sp = static_cast<std::size_t>(p);
                ctx.d13[static_cast<std::size_t>(i) * ctx.n + sp] = scale * gamma[sp] * (table.sin_pos[sp] - mean_sin);
                ctx.d14[static_cast<std::size_t>(i) * ctx.n + sp] = scale * gamma[sp] * (table.cos_pos[sp] - mean_cos);
            }
        }
    }
    return ctx;
}

double context_risk(const AttnContext& ctx, int threads) {
    const auto sums = reduce_over_inputs(ctx.n, 1, threads, [&](std::uint32_t word, double* acc) {
        const double yhat = fixed_head_forward(ctx.vstar1(word), ctx.clf);
        acc[0] += squared_hinge(ctx.label(word), yhat);
    });
    return sums[0] / static_cast<double>(input_count(ctx.n));
}

void check_heads(const AttentionHeads& heads, const ParitySpec& spec) {
    if (heads.count() < 1) throw std::invalid_argument("expected_risk: no heads");
    if (!(heads.tau > 0.0)) throw std::invalid_argument("expected_risk: tau must be > 0");
    if (spec.k() < 1) throw std::invalid_argument("expected_risk: empty parity set");
}

}  // namespace

AttentionHeads init_heads(int k, std::uint64_t seed, double tau, AttentionMode mode) {
    if (k < 1) throw std::invalid_argument("init_heads: k must be >= 1");
    Rng rng(seed);
    AttentionHeads heads;
    heads.tau = tau;
    heads.mode = mode;
    heads.params.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const double omega = rng.uniform(0.0, 2.0 * std::numbers::pi);
        heads.params.push_back({std::cos(omega), std::sin(omega)});
    }
    return heads;
}

double expected_risk(const AttentionHeads& heads, const FixedTelescopingHead& clf,
                     const ParitySpec& spec, int threads) {
    check_heads(heads, spec);
    return context_risk(make_context(heads, clf, spec, false), threads);
}

RiskReport risk_and_attention_gradient(const AttentionHeads& heads, const FixedTelescopingHead& clf,
                                       const ParitySpec& spec, int threads) {
    check_heads(heads, spec);
    const AttnContext ctx = make_context(heads, clf, spec, true);
    const int k = ctx.k;
    const std::size_t dim = 1 + 2 * static_cast<std::size_t>(k);

    const auto sums = reduce_over_inputs(ctx.n, dim, threads, [&](std::uint32_t word, double* acc) {
        const double v1 = ctx.vstar1(word);
        const int y = ctx.label(word);
        const double yhat = fixed_head_forward(v1, ctx.clf);
        acc[0] += squared_hinge(y, yhat);
        if (y * yhat < 1.0) {
            const double w = 2.0 * (yhat - y) * fixed_head_slope(v1, ctx.clf);
            double t13[kMaxEnumerationBits] = {0.0};
            double t14[kMaxEnumerationBits] = {0.0};
            for (std::uint32_t bits = word; bits; bits &= bits - 1) {
                const auto p = static_cast<std::size_t>(std::countr_zero(bits));
                for (int i = 0; i < k; ++i) {
                    t13[i] += ctx.d13[static_cast<std::size_t>(i) * ctx.n + p];
                    t14[i] += ctx.d14[static_cast<std::size_t>(i) * ctx.n + p];
                }
            }
            for (int i = 0; i < k; ++i) {
                acc[1 + 2 * static_cast<std::size_t>(i)] += w * t13[i];
                acc[2 + 2 * static_cast<std::size_t>(i)] += w * t14[i];
            }
        }
    });

    const double total = static_cast<double>(input_count(ctx.n));
    RiskReport report;
    report.risk = sums[0] / total;
    report.grad.assign(sums.begin() + 1, sums.end());
    double norm_sq = 0.0;
    for (double& g : report.grad) {
        g /= total;
        norm_sq += g * g;
    }
    report.grad_norm = std::sqrt(norm_sq);
    return report;
}

std::vector<double> analytic_attention_gradient(const AttentionHeads& heads,
                                                const FixedTelescopingHead& clf,
                                                const ParitySpec& spec, int threads) {
    return risk_and_attention_gradient(heads, clf, spec, threads).grad;
}

std::vector<double> yhat_attention_gradient(const AttentionHeads& heads,
                                            const FixedTelescopingHead& clf, const BitString& x,
                                            const EmbeddingTable& table) {
    if (heads.mode == AttentionMode::hard) {
        throw std::invalid_argument("yhat gradient: hard mode is not differentiable");
    }
    const int k = heads.count();
    const int n = table.n;
    std::vector<double> grad(2 * static_cast<std::size_t>(k), 0.0);

    double v1 = 0.0;
    std::vector<std::vector<double>> gammas;
    gammas.reserve(heads.params.size());
    for (const auto& head : heads.params) {
        auto gamma = softmax_scores(raw_scores(head, table), heads.tau);
        for (int p = 1; p <= n; ++p) {
            v1 += gamma[static_cast<std::size_t>(p - 1)] * x.bit(p) / k;
        }
        gammas.push_back(std::move(gamma));
    }
    const double slope = fixed_head_slope(v1, clf);
    for (int i = 0; i < k; ++i) {
        const auto& gamma = gammas[static_cast<std::size_t>(i)];
        double mean_sin = 0.0;
        double mean_cos = 0.0;
        for (int p = 0; p < n; ++p) {
            mean_sin += gamma[static_cast<std::size_t>(p)] * table.sin_pos[static_cast<std::size_t>(p)];
            mean_cos += gamma[static_cast<std::size_t>(p)] * table.cos_pos[static_cast<std::size_t>(p)];
        }
        double t13 = 0.0;
        double t14 = 0.0;
        for (int p = 1; p <= n; ++p) {
            const auto sp = static_cast<std::size_t>(p - 1);
            if (x.bit(p)) {
                t13 += gamma[sp] * (table.sin_pos[sp] - mean_sin);
                t14 += gamma[sp] * (table.cos_pos[sp] - mean_cos);
            }
        }
        const double scale = slope / (k * heads.tau);
        grad[2 * static_cast<std::size_t>(i)] = scale * t13;
        grad[2 * static_cast<std::size_t>(i) + 1] = scale * t14;
    }
    return grad;
}

std::vector<double> finite_difference_gradient(const std::function<double(std::span<const double>)>& f,
                                               std::span<const double> x0, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("finite_difference_gradient: step must be > 0");
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> grad(x0.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + step;
        const double fp = f(x);
        x[i] = saved - step;
        const double fm = f(x);
        x[i] = saved;
        grad[i] = (fp - fm) / (2.0 * step);
    }
    return grad;
}

std::vector<double> fd_attention_gradient(const AttentionHeads& heads,
                                          const FixedTelescopingHead& clf, const ParitySpec& spec,
                                          double step) {
    std::vector<double> flat(2 * static_cast<std::size_t>(heads.count()));
    for (int i = 0; i < heads.count(); ++i) {
        flat[2 * static_cast<std::size_t>(i)] = heads.params[static_cast<std::size_t>(i)][0];
        flat[2 * static_cast<std::size_t>(i) + 1] = heads.params[static_cast<std::size_t>(i)][1];
    }
    auto objective = [&](std::span<const double> p) {
        AttentionHeads h = heads;
        for (int i = 0; i < h.count(); ++i) {
            h.params[static_cast<std::size_t>(i)][0] = p[2 * static_cast<std::size_t>(i)];
            h.params[static_cast<std::size_t>(i)][1] = p[2 * static_cast<std::size_t>(i) + 1];
        }
        return expected_risk(h, clf, spec, 1);
    };
    return finite_difference_gradient(objective, flat, step);
}

namespace {

double min_head_gap(const AttentionHeads& heads, const EmbeddingTable& table) {
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& head : heads.params) {
        const auto s = raw_scores(head, table);
        double top = -std::numeric_limits<double>::infinity();
        double second = top;
        for (double v : s) {
            if (v > top) {
                second = top;
                top = v;
            } else if (v > second) {
                second = v;
            }
        }
        gap = std::min(gap, top - second);
    }
    return gap;
}

}  // namespace

std::pair<TrajectoryLog, AttentionHeads> gd_train_attention(const TrainConfig& config,
                                                            const ParitySpec& spec) {
    if (!(config.eta > 0.0)) throw std::invalid_argument("gd_train_attention: eta must be > 0");
    if (config.epochs < 1) throw std::invalid_argument("gd_train_attention: epochs must be >= 1");
    if (!(config.epsilon > 0.0 && config.epsilon < std::numeric_limits<double>::infinity())) {
        throw std::invalid_argument("gd_train_attention: bad epsilon");
    }

    const int k = spec.k();
    const EmbeddingTable table(spec.n);
    const FixedTelescopingHead clf{k, config.b_sigma};
    AttentionHeads heads = init_heads(k, config.seed, config.tau);

    auto tau_at = [&](int step) {
        if (!config.anneal_to) return config.tau;
        const double t = static_cast<double>(step) / config.epochs;
        return config.tau + (*config.anneal_to - config.tau) * t;
    };

    TrajectoryLog log;
    double eta = config.eta;
    for (int step = 0;; ++step) {
        heads.tau = tau_at(step);
        const RiskReport report = risk_and_attention_gradient(heads, clf, spec, config.threads);
        if (!std::isfinite(report.risk) || !std::isfinite(report.grad_norm)) {
            throw numeric_error("gd_train_attention: non-finite risk or gradient", step);
        }
        TrajectoryStep row;
        row.step = step;
        row.risk = report.risk;
        row.grad_norm = report.grad_norm;
        row.pl_ratio = report.risk > 0.0 ? 0.5 * report.grad_norm * report.grad_norm / report.risk : 0.0;
        row.eta = eta;
        row.min_head_gap = min_head_gap(heads, table);
        log.steps.push_back(row);

        if (report.risk < config.epsilon) {
            log.status = TrainStatus::converged;
            break;
        }
        if (step >= config.epochs) {
            log.status = TrainStatus::epoch_limit;
            break;
        }

        // Accept the step only if the risk does not increase; halve eta otherwise.
        for (;;) {
            AttentionHeads cand = heads;
            for (int i = 0; i < k; ++i) {
                cand.params[static_cast<std::size_t>(i)][0] -= eta * report.grad[2 * static_cast<std::size_t>(i)];
                cand.params[static_cast<std::size_t>(i)][1] -= eta * report.grad[2 * static_cast<std::size_t>(i) + 1];
            }
            const double cand_risk = expected_risk(cand, clf, spec, config.threads);
            if (std::isfinite(cand_risk) && cand_risk <= report.risk + 1e-12) {
                heads = cand;
                ++log.updates;
                break;
            }
            eta *= 0.5;
            if (eta < 1e-18) throw numeric_error("gd_train_attention: eta underflow", step);
        }
    }

    log.final_risk = log.steps.back().risk;
    log.final_eta = eta;
    return {std::move(log), std::move(heads)};
}

namespace {

std::vector<Vec4> attention_vector_table(std::span<const GeneralAttentionMatrix> heads,
                                         AttentionMode mode, double tau, int n,
                                         const EmbeddingTable& table) {
    const std::uint64_t total = input_count(n);
    std::vector<Vec4> out(total);
    for (std::uint64_t w = 0; w < total; ++w) {
        out[w] = attention_vector(heads, mode, tau, BitString(static_cast<std::uint32_t>(w), n), table);
    }
    return out;
}

struct FfnnEval {
    double risk = 0.0;
    std::vector<double> grad;
    double grad_norm = 0.0;
};

FfnnEval ffnn_risk_and_gradient(const TrainableFFNN1& net, std::span<const Vec4> vtab,
                                const ParitySpec& spec, int threads, bool with_gradient) {
    const std::uint32_t mask = spec.mask();
    const int q = net.q;
    const std::size_t dim = with_gradient ? 2 + 6 * static_cast<std::size_t>(q) : 1;

    const auto sums = reduce_over_inputs(spec.n, dim, threads, [&](std::uint32_t word, double* acc) {
        const Vec4& v = vtab[word];
        const int y = (std::popcount(word & mask) & 1) ? -1 : +1;
        const double yhat = ffnn1_forward(v, net);
        acc[0] += squared_hinge(y, yhat);
        if (with_gradient && y * yhat < 1.0) {
            const double dl = 2.0 * (yhat - y);
            double* g = acc + 1;
            for (int i = 0; i < q; ++i) {
                const auto si = static_cast<std::size_t>(i);
                double h = net.hidden_b[si];
                for (int d = 0; d < 4; ++d) h += net.hidden_w[si][static_cast<std::size_t>(d)] * v[static_cast<std::size_t>(d)];
                const double act = smoothed_relu(h, net.b_sigma);
                const double dact = smoothed_relu_deriv(h, net.b_sigma);
                const double alpha = net.out_w[si];
                for (int d = 0; d < 4; ++d) g[6 * si + static_cast<std::size_t>(d)] += dl * alpha * dact * v[static_cast<std::size_t>(d)];
                g[6 * si + 4] += dl * alpha * dact;
                g[6 * si + 5] += dl * act;
            }
            g[6 * static_cast<std::size_t>(q)] += dl;
        }
    });

    const double total = static_cast<double>(input_count(spec.n));
    FfnnEval eval;
    eval.risk = sums[0] / total;
    if (with_gradient) {
        eval.grad.assign(sums.begin() + 1, sums.end());
        double norm_sq = 0.0;
        for (double& g : eval.grad) {
            g /= total;
            norm_sq += g * g;
        }
        eval.grad_norm = std::sqrt(norm_sq);
    }
    return eval;
}

void apply_norm_cap(TrainableFFNN1& net, double cap) {
    const double product = net.alpha_norm() * net.beta_norm();
    if (product > cap && product > 0.0) {
        const double scale = std::sqrt(cap / product);
        for (auto& row : net.hidden_w) {
            for (double& w : row) w *= scale;
        }
        for (double& a : net.out_w) a *= scale;
    }
}

}  // namespace

double expected_risk(std::span<const GeneralAttentionMatrix> heads, AttentionMode mode, double tau,
                     const TrainableFFNN1& net, const ParitySpec& spec, int threads) {
    if (mode == AttentionMode::soft && !(tau > 0.0)) {
        throw std::invalid_argument("expected_risk: tau must be > 0");
    }
    const EmbeddingTable table(spec.n);
    const auto vtab = attention_vector_table(heads, mode, tau, spec.n, table);
    return ffnn_risk_and_gradient(net, vtab, spec, threads, false).risk;
}

double expected_risk(const ReLUParityNet& net, const ParitySpec& spec, int threads) {
    const std::uint32_t mask = spec.mask();
    const auto sums = reduce_over_inputs(spec.n, 1, threads, [&](std::uint32_t word, double* acc) {
        const double yhat = relu_parity_forward(BitString(word, spec.n), net);
        const int y = (std::popcount(word & mask) & 1) ? -1 : +1;
        acc[0] += squared_hinge(y, yhat);
    });
    return sums[0] / static_cast<double>(input_count(spec.n));
}

std::pair<TrajectoryLog, TrainableFFNN1> gd_train_ffnn(const TrainConfig& config,
                                                       const ParitySpec& spec,
                                                       std::span<const GeneralAttentionMatrix> heads,
                                                       AttentionMode mode, int q,
                                                       std::optional<double> norm_cap) {
    if (q < 1) throw std::invalid_argument("gd_train_ffnn: q must be >= 1");
    if (!(config.eta > 0.0)) throw std::invalid_argument("gd_train_ffnn: eta must be > 0");

    const EmbeddingTable table(spec.n);
    const auto vtab = attention_vector_table(heads, mode, config.tau, spec.n, table);

    TrainableFFNN1 net = TrainableFFNN1::random_init(q, config.seed, 0.5, config.b_sigma);
    if (norm_cap) apply_norm_cap(net, *norm_cap);

    TrajectoryLog log;
    double eta = config.eta;
    const int flat_dim = net.flat_dim();
    std::vector<double> flat(static_cast<std::size_t>(flat_dim));

    for (int step = 0;; ++step) {
        const FfnnEval eval = ffnn_risk_and_gradient(net, vtab, spec, config.threads, true);
        if (!std::isfinite(eval.risk) || !std::isfinite(eval.grad_norm)) {
            throw numeric_error("gd_train_ffnn: non-finite risk or gradient", step);
        }
        TrajectoryStep row;
        row.step = step;
        row.risk = eval.risk;
        row.grad_norm = eval.grad_norm;
        row.pl_ratio = eval.risk > 0.0 ? 0.5 * eval.grad_norm * eval.grad_norm / eval.risk : 0.0;
        row.eta = eta;
        row.alpha_norm = net.alpha_norm();
        row.beta_norm = net.beta_norm();
        log.steps.push_back(row);

        if (eval.risk < config.epsilon) {
            log.status = TrainStatus::converged;
            break;
        }
        if (step >= config.epochs) {
            log.status = TrainStatus::epoch_limit;
            break;
        }

        net.to_flat(flat);
        TrainableFFNN1 cand = net;
        int halvings = 0;
        for (;;) {
            std::vector<double> moved(flat);
            for (int j = 0; j < flat_dim; ++j) moved[static_cast<std::size_t>(j)] -= eta * eval.grad[static_cast<std::size_t>(j)];
            cand.from_flat(moved);
            if (norm_cap) apply_norm_cap(cand, *norm_cap);
            const double cand_risk = ffnn_risk_and_gradient(cand, vtab, spec, config.threads, false).risk;
            // The projection can block descent at the norm boundary; cap the retries.
            if ((std::isfinite(cand_risk) && cand_risk <= eval.risk + 1e-12) || halvings >= 60) {
                net = cand;
                ++log.updates;
                break;
            }
            eta *= 0.5;
            ++halvings;
        }
    }

    log.final_risk = log.steps.back().risk;
    log.final_eta = eta;
    return {std::move(log), std::move(net)};
}

}  // namespace paritylab
