// paritylab: exact-risk laboratory for single-attention-layer parity learning.
//
// Subcommands: train, fixed-attention, gradcheck, probe, express. Every output
// file starts with a comment line holding the resolved configuration, and all
// results are deterministic for a fixed seed regardless of --threads.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "paritylab/attention.hpp"
#include "paritylab/bitstring.hpp"
#include "paritylab/heads.hpp"
#include "paritylab/io.hpp"
#include "paritylab/probes.hpp"
#include "paritylab/risk.hpp"
#include "paritylab/rng.hpp"

namespace pl = paritylab;

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct Options {
    int n = 20;
    int k = 3;
    std::vector<int> parity_bits;
    double tau = -1.0;  // resolved to 2/n when unset
    double eta = 0.5;
    int epochs = 200;
    double epsilon = 0.01;
    std::uint64_t seed = 1;
    double b_sigma = 1e-6;
    int m = 2;
    std::string mode = "soft";
    int q = 8;
    std::string out = ".";
    int threads = 1;
    double anneal_to = -1.0;
    int trials = 1000;
    double norm_cap = -1.0;  // resolved to n/(10 m^2) when unset

    double resolved_tau() const { return tau > 0.0 ? tau : 2.0 / n; }
    pl::AttentionMode attention_mode() const {
        return mode == "hard" ? pl::AttentionMode::hard : pl::AttentionMode::soft;
    }
};

std::string join_bits(const std::vector<int>& bits) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < bits.size(); ++i) ss << (i ? "," : "") << bits[i];
    return ss.str();
}

pl::ParitySpec resolve_spec(const Options& opt) {
    if (!opt.parity_bits.empty()) {
        if (static_cast<int>(opt.parity_bits.size()) != opt.k) {
            throw CLI::ValidationError("--parity-bits", "list length must equal --k");
        }
        return pl::ParitySpec::make(opt.n, opt.parity_bits);
    }
    return pl::ParitySpec::random(opt.n, opt.k, opt.seed);
}

pl::TrainConfig train_config(const Options& opt) {
    pl::TrainConfig config;
    config.eta = opt.eta;
    config.epochs = opt.epochs;
    config.epsilon = opt.epsilon;
    config.tau = opt.resolved_tau();
    config.seed = opt.seed;
    config.b_sigma = opt.b_sigma;
    config.threads = opt.threads;
    if (opt.anneal_to > 0.0) config.anneal_to = opt.anneal_to;
    return config;
}

// Resolved config for file headers and startup echo; excludes --threads so
// outputs stay byte-identical across worker counts.
std::string config_line(const std::string& cmd, const Options& opt, const pl::ParitySpec* spec) {
    std::ostringstream ss;
    ss << "paritylab " << cmd << " n=" << opt.n << " k=" << opt.k;
    if (spec) ss << " parity_bits=" << join_bits(spec->bits);
    ss << " tau=" << pl::format_double(opt.resolved_tau());
    ss << " eta=" << pl::format_double(opt.eta);
    ss << " epochs=" << opt.epochs;
    ss << " epsilon=" << pl::format_double(opt.epsilon);
    ss << " seed=" << opt.seed;
    ss << " b_sigma=" << pl::format_double(opt.b_sigma);
    ss << " mode=" << opt.mode;
    if (cmd == "fixed-attention") {
        ss << " m=" << opt.m << " q=" << opt.q
           << " norm_cap=" << pl::format_double(opt.norm_cap);
    }
    if (cmd == "probe" || cmd == "gradcheck") ss << " trials=" << opt.trials;
    if (opt.anneal_to > 0.0) ss << " anneal_to=" << pl::format_double(opt.anneal_to);
    return ss.str();
}

std::filesystem::path out_path(const Options& opt, const char* name) {
    std::filesystem::create_directories(opt.out);
    return std::filesystem::path(opt.out) / name;
}

std::vector<pl::GeneralAttentionMatrix> frozen_random_heads(int m, pl::Rng& rng) {
    std::vector<pl::GeneralAttentionMatrix> heads(static_cast<std::size_t>(m));
    for (auto& h : heads) {
        for (auto& row : h.a) {
            for (double& v : row) v = rng.uniform(-1.0, 1.0);
        }
    }
    return heads;
}

int cmd_train(Options& opt) {
    const auto spec = resolve_spec(opt);
    const auto cfg = config_line("train", opt, &spec);
    std::cout << cfg << "\n";

    const auto config = train_config(opt);
    auto [log, heads] = pl::gd_train_attention(config, spec);

    const pl::EmbeddingTable table(spec.n);
    const auto map = pl::attention_map(heads, table);

    pl::write_trajectory_csv(out_path(opt, "trajectory.csv").string(), cfg, log);
    pl::write_attention_csv(out_path(opt, "attention.csv").string(), cfg, map);
    pl::write_attention_pgm(out_path(opt, "attention.pgm").string(), cfg, map);
    pl::write_checkpoint(out_path(opt, "checkpoint.txt").string(), cfg,
                         pl::checkpoint_entries(heads, spec, config, log));

    const bool converged = log.status == pl::TrainStatus::converged;
    std::cout << "final risk = " << pl::format_double(log.final_risk) << " ("
              << (converged ? "converged" : "epoch-limit") << " after " << log.updates
              << " updates, final eta " << pl::format_double(log.final_eta) << ")\n";
    for (int i = 1; i <= map.m; ++i) {
        int argmax = 1;
        for (int p = 2; p <= map.n; ++p) {
            if (map.at(i, p) > map.at(i, argmax)) argmax = p;
        }
        std::cout << "head " << i << ": argmax position " << argmax << ", gamma "
                  << pl::format_double(map.at(i, argmax)) << "\n";
    }
    std::cout << "wrote trajectory.csv attention.csv attention.pgm checkpoint.txt in " << opt.out
              << "\n";
    return converged ? kExitConverged : kExitFail;
}

int cmd_fixed_attention(Options& opt) {
    if (opt.norm_cap <= 0.0) opt.norm_cap = opt.n / (10.0 * opt.m * opt.m);
    const auto cfg_probe = config_line("fixed-attention", opt, nullptr);
    std::cout << cfg_probe << "\n";

    pl::Rng rng(opt.seed);
    const auto heads = frozen_random_heads(opt.m, rng);
    const pl::EmbeddingTable table(opt.n);
    const int p = pl::adversarial_position(heads, table);

    // Adversarial parity set: p plus k-1 random other positions.
    std::vector<int> bits{p};
    {
        std::vector<int> pool;
        for (int j = 1; j <= opt.n; ++j) {
            if (j != p) pool.push_back(j);
        }
        for (int i = 0; i < opt.k - 1; ++i) {
            const auto j = i + static_cast<int>(rng.below(pool.size() - i));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
            bits.push_back(pool[static_cast<std::size_t>(i)]);
        }
    }
    const auto spec = pl::ParitySpec::make(opt.n, bits);
    const auto cfg = config_line("fixed-attention", opt, &spec);
    std::cout << "adversarial position p = " << p << ", parity_bits = " << join_bits(spec.bits)
              << "\n";

    std::vector<pl::ProbeReport> reports;
    const auto mode = opt.attention_mode();
    if (mode == pl::AttentionMode::hard) {
        const auto cert = pl::corollary20_certificate(heads, opt.n);
        reports.push_back(cert.flip_invariance);
        reports.push_back(cert.coverage);
    } else {
        const auto census = pl::theorem2_census(heads, opt.n);
        reports.push_back(census.coverage);
        reports.push_back(census.score_cap);
    }

    auto config = train_config(opt);
    auto [log, net] = pl::gd_train_ffnn(config, spec, heads, mode, opt.q, opt.norm_cap);

    const double bound = mode == pl::AttentionMode::hard
                             ? reports[1].bound  // coverage bound holds for any classifier
                             : pl::theorem2_bound(opt.n, opt.m, net.alpha_norm(), net.beta_norm());
    pl::ProbeReport risk_row{"fixed_attention_risk_floor", static_cast<long>(log.steps.size()),
                             log.final_risk, bound, log.final_risk >= bound - 0.05};
    reports.push_back(risk_row);

    pl::write_trajectory_csv(out_path(opt, "trajectory.csv").string(), cfg, log);
    pl::write_probes_csv(out_path(opt, "probes.csv").string(), cfg, reports);

    std::cout << "ffnn final risk = " << pl::format_double(log.final_risk)
              << ", alpha norm = " << pl::format_double(net.alpha_norm())
              << ", beta norm = " << pl::format_double(net.beta_norm())
              << ", lower bound = " << pl::format_double(bound) << "\n";
    bool ok = true;
    for (const auto& r : reports) {
        std::cout << r.probe << ": observed " << pl::format_double(r.observed) << " vs bound "
                  << pl::format_double(r.bound) << " -> " << (r.pass ? "pass" : "FAIL") << "\n";
        ok = ok && r.pass;
    }
    std::cout << "wrote trajectory.csv probes.csv in " << opt.out << "\n";
    return ok ? kExitConverged : kExitFail;
}

int cmd_gradcheck(Options& opt) {
    const auto spec = resolve_spec(opt);
    const auto cfg = config_line("gradcheck", opt, &spec);
    std::cout << cfg << "\n";

    const auto heads = pl::init_heads(spec.k(), opt.seed, opt.resolved_tau());
    const pl::FixedTelescopingHead clf{spec.k(), opt.b_sigma};
    const auto analytic = pl::analytic_attention_gradient(heads, clf, spec, opt.threads);
    const auto fd = pl::fd_attention_gradient(heads, clf, spec, 1e-6);

    double max_rel = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double scale = std::max({1e-3, std::abs(analytic[i]), std::abs(fd[i])});
        max_rel = std::max(max_rel, std::abs(analytic[i] - fd[i]) / scale);
    }
    std::cout << "max relative error analytic vs central differences = " << pl::format_double(max_rel)
              << "\n";
    return max_rel < 1e-5 ? kExitConverged : kExitFail;
}

int cmd_probe(Options& opt) {
    const auto spec = resolve_spec(opt);
    const auto cfg = config_line("probe", opt, &spec);
    std::cout << cfg << "\n";

    const double tau = opt.resolved_tau();
    std::vector<pl::ProbeReport> reports;
    reports.push_back(pl::lipschitz_probe_yhat(spec, tau, opt.b_sigma, opt.trials, opt.seed));
    reports.push_back(pl::lipschitz_partial_probe(spec, tau, opt.b_sigma, opt.trials, opt.seed + 1));
    reports.push_back(pl::smoothness_probe(spec, tau, opt.b_sigma, opt.trials, opt.seed + 2));
    reports.push_back(pl::smoothness_partial_probe(spec, tau, opt.b_sigma, opt.trials, opt.seed + 3));
    reports.push_back(pl::ygrady_lipschitz_probe(spec, tau, opt.b_sigma, opt.trials, opt.seed + 4));

    const auto config = train_config(opt);
    auto [log, heads] = pl::gd_train_attention(config, spec);
    const pl::FixedTelescopingHead clf{spec.k(), opt.b_sigma};
    reports.push_back(pl::grad_correlation_probe(heads, clf, spec, opt.seed + 5));

    const pl::EmbeddingTable table(spec.n);
    const double c2 = pl::measure_c2(heads, table);
    reports.push_back(pl::pl_constant_probe(log, spec.n, spec.k(), tau, opt.epsilon, c2));

    const auto s2h = pl::soft_to_hard_check(heads, clf, spec, opt.epsilon);
    reports.push_back({s2h.applicable ? "soft_to_hard" : "soft_to_hard_midpoint",
                       static_cast<long>(s2h.heads.size()), s2h.hard_risk, opt.epsilon, s2h.pass});

    pl::write_probes_csv(out_path(opt, "probes.csv").string(), cfg, reports);

    bool ok = true;
    for (const auto& r : reports) {
        std::cout << r.probe << ": observed " << pl::format_double(r.observed) << " vs bound "
                  << pl::format_double(r.bound) << " (" << r.samples << " samples) -> "
                  << (r.pass ? "pass" : "FAIL") << "\n";
        ok = ok && r.pass;
    }
    std::cout << "measured c2 = " << pl::format_double(c2) << ", training risk "
              << pl::format_double(log.final_risk) << "\n";
    std::cout << "wrote probes.csv in " << opt.out << "\n";
    return ok ? kExitConverged : kExitFail;
}

int cmd_express(Options& opt) {
    if (opt.n > 12) {
        std::cerr << "express: exhaustive verification is capped at n = 12\n";
        return kExitUsage;
    }
    const auto cfg = config_line("express", opt, nullptr);
    std::cout << cfg << "\n";

    const pl::EmbeddingTable table(opt.n);
    long checked = 0;
    bool ok = true;
    double worst = 0.0;

    std::vector<int> bits(static_cast<std::size_t>(opt.k));
    // enumerate all size-k subsets of [n] in lexicographic order
    for (int i = 0; i < opt.k; ++i) bits[static_cast<std::size_t>(i)] = i + 1;
    for (;;) {
        const auto spec = pl::ParitySpec::make(opt.n, bits);

        const pl::ReLUParityNet relu{spec.bits};
        const double relu_risk = pl::expected_risk(relu, spec, opt.threads);

        pl::AttentionHeads aligned;
        aligned.mode = pl::AttentionMode::hard;
        aligned.tau = opt.resolved_tau();
        for (int b : spec.bits) aligned.params.push_back({table.sin_at(b), table.cos_at(b)});
        const pl::FixedTelescopingHead clf{spec.k(), opt.b_sigma};
        const double attn_risk = pl::expected_risk(aligned, clf, spec, opt.threads);

        worst = std::max({worst, relu_risk, attn_risk});
        ok = ok && relu_risk < 1e-6 && attn_risk < 1e-6;
        ++checked;

        // next combination
        int i = opt.k - 1;
        while (i >= 0 && bits[static_cast<std::size_t>(i)] == opt.n - (opt.k - 1 - i)) --i;
        if (i < 0) break;
        ++bits[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < opt.k; ++j) {
            bits[static_cast<std::size_t>(j)] = bits[static_cast<std::size_t>(j - 1)] + 1;
        }
    }

    std::cout << "checked " << checked << " parity sets of size " << opt.k << " over all "
              << pl::input_count(opt.n) << " inputs; worst risk = " << pl::format_double(worst)
              << "\n";
    std::cout << "relu ladder parameters: " << pl::parameter_count(pl::ReLUParityNet{
                     std::vector<int>(static_cast<std::size_t>(opt.k), 1)})
              << " (k biases + k output weights + shared input weight + output bias)\n";
    std::cout << "aligned-transformer parameters: " << pl::aligned_transformer_parameter_count(opt.k)
              << " (16 per head + the same classifier counting)\n";
    return ok ? kExitConverged : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"paritylab: exact-risk laboratory for attention-based parity learning"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--n", opt.n, "input length")->check(CLI::Range(1, 24));
        cmd->add_option("--k", opt.k, "parity set size");
        cmd->add_option("--parity-bits", opt.parity_bits, "explicit parity positions")->delimiter(',');
        cmd->add_option("--tau", opt.tau, "softmax temperature (default 2/n)");
        cmd->add_option("--eta", opt.eta, "learning rate");
        cmd->add_option("--epochs", opt.epochs, "max gradient steps");
        cmd->add_option("--epsilon", opt.epsilon, "target risk");
        cmd->add_option("--seed", opt.seed, "rng seed");
        cmd->add_option("--b-sigma", opt.b_sigma, "smoothed relu constant");
        cmd->add_option("--mode", opt.mode, "attention mode")->check(CLI::IsMember({"soft", "hard"}));
        cmd->add_option("--out", opt.out, "output directory");
        cmd->add_option("--threads", opt.threads, "worker threads")->check(CLI::Range(1, 256));
    };

    auto* train = app.add_subcommand("train", "train attention heads by full-batch GD");
    add_common(train);
    train->add_option("--anneal-to", opt.anneal_to, "linear tau schedule target (default constant)");

    auto* fixed = app.add_subcommand("fixed-attention", "frozen heads, trainable FFNN, certificates");
    add_common(fixed);
    fixed->add_option("--m", opt.m, "frozen head count")->check(CLI::Range(1, 64));
    fixed->add_option("--q", opt.q, "FFNN hidden width");
    fixed->add_option("--norm-cap", opt.norm_cap, "cap on ||alpha|| * ||beta|| (default n/(10 m^2))");

    auto* gradcheck = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");
    add_common(gradcheck);

    auto* probe = app.add_subcommand("probe", "run the lemma probe suite");
    add_common(probe);
    probe->add_option("--trials", opt.trials, "sample pairs per probe");

    auto* express = app.add_subcommand("express", "exhaustive expressivity verification");
    add_common(express);

    // defaults tuned per subcommand
    opt.b_sigma = 1e-6;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_name() == "CallForHelp" ? 0 : kExitUsage;
    }

    try {
        if (app.got_subcommand(train)) return cmd_train(opt);
        if (app.got_subcommand(fixed)) return cmd_fixed_attention(opt);
        if (app.got_subcommand(gradcheck)) {
            if (opt.n > 12) opt.n = 8;  // gradcheck defaults to a small instance
            return cmd_gradcheck(opt);
        }
        if (app.got_subcommand(probe)) {
            return cmd_probe(opt);
        }
        if (app.got_subcommand(express)) {
            if (opt.b_sigma == 1e-6) opt.b_sigma = 1e-8;
            return cmd_express(opt);
        }
    } catch (const pl::numeric_error& e) {
        std::cerr << "numeric failure at step " << e.step() << ": " << e.what() << "\n";
        return kExitNumeric;
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::length_error& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
