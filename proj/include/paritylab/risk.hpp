#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "paritylab/attention.hpp"
#include "paritylab/bitstring.hpp"
#include "paritylab/heads.hpp"

namespace paritylab {

// Raised when a training step produces a non-finite risk or gradient.
class numeric_error : public std::runtime_error {
public:
    numeric_error(const std::string& what, int step) : std::runtime_error(what), step_(step) {}
    int step() const { return step_; }

private:
    int step_ = -1;
};

struct TrainConfig {
    double eta = 0.5;
    int epochs = 200;
    double epsilon = 0.01;
    double tau = 0.1;
    std::uint64_t seed = 1;
    double b_sigma = 1e-6;
    int threads = 1;
    std::optional<double> anneal_to;  // linear tau schedule target; constant tau when absent
};

struct RiskReport {
    double risk = 0.0;
    std::vector<double> grad;
    double grad_norm = 0.0;
};

struct TrajectoryStep {
    int step = 0;
    double risk = 0.0;
    double grad_norm = 0.0;
    double pl_ratio = 0.0;  // 0.5 * ||grad||^2 / risk
    double eta = 0.0;
    double min_head_gap = 0.0;  // min over heads of (top raw score - runner-up)
    double alpha_norm = 0.0;    // FFNN training only
    double beta_norm = 0.0;
};

enum class TrainStatus { converged, epoch_limit };

struct TrajectoryLog {
    std::vector<TrajectoryStep> steps;
    TrainStatus status = TrainStatus::epoch_limit;
    double final_risk = 0.0;
    double final_eta = 0.0;
    int updates = 0;  // accepted gradient steps
};

// k unit 2-vectors at uniformly random angles; deterministic for a seed.
AttentionHeads init_heads(int k, std::uint64_t seed, double tau = 0.1,
                          AttentionMode mode = AttentionMode::soft);

// Exact expected risk: fixed-order mean of the squared hinge loss over all
// 2^n inputs, blocked tree reduction (bit-identical for any thread count).
double expected_risk(const AttentionHeads& heads, const FixedTelescopingHead& clf,
                     const ParitySpec& spec, int threads = 1);
double expected_risk(std::span<const GeneralAttentionMatrix> heads, AttentionMode mode, double tau,
                     const TrainableFFNN1& net, const ParitySpec& spec, int threads = 1);
double expected_risk(const ReLUParityNet& net, const ParitySpec& spec, int threads = 1);

// Exact gradient of the expected risk w.r.t. the flat head parameters
// [a13^(1), a14^(1), ..., a13^(k), a14^(k)], soft mode only.
RiskReport risk_and_attention_gradient(const AttentionHeads& heads,
                                       const FixedTelescopingHead& clf, const ParitySpec& spec,
                                       int threads = 1);
std::vector<double> analytic_attention_gradient(const AttentionHeads& heads,
                                                const FixedTelescopingHead& clf,
                                                const ParitySpec& spec, int threads = 1);

// Gradient of yhat (not the loss) w.r.t. the flat head parameters at one input.
std::vector<double> yhat_attention_gradient(const AttentionHeads& heads,
                                            const FixedTelescopingHead& clf, const BitString& x,
                                            const EmbeddingTable& table);

// Central finite differences of an arbitrary objective; oracle for the
// analytic formulas.
std::vector<double> finite_difference_gradient(const std::function<double(std::span<const double>)>& f,
                                               std::span<const double> x0, double step);
std::vector<double> fd_attention_gradient(const AttentionHeads& heads,
                                          const FixedTelescopingHead& clf, const ParitySpec& spec,
                                          double step);

// Full-batch GD on the k = |B| head parameters with the telescoping
// classifier frozen. Halves eta whenever a step would increase the risk and
// keeps the reduced value. Stops at risk < epsilon or the epoch limit.
std::pair<TrajectoryLog, AttentionHeads> gd_train_attention(const TrainConfig& config,
                                                            const ParitySpec& spec);

// Full-batch GD on all FFNN-1 parameters over frozen attention heads. When
// norm_cap is set, rescales alpha and beta after each step so that
// ||alpha|| * ||beta|| stays at or below the cap.
std::pair<TrajectoryLog, TrainableFFNN1> gd_train_ffnn(const TrainConfig& config,
                                                       const ParitySpec& spec,
                                                       std::span<const GeneralAttentionMatrix> heads,
                                                       AttentionMode mode, int q,
                                                       std::optional<double> norm_cap = std::nullopt);

}  // namespace paritylab
