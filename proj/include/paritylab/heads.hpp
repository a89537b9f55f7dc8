#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "paritylab/bitstring.hpp"
#include "paritylab/embedding.hpp"

namespace paritylab {

// sigma(x) = (x + sqrt(x^2 + b)) / 2, a smooth upper approximation of ReLU.
inline double smoothed_relu(double x, double b_sigma) {
    if (!(b_sigma > 0.0)) throw std::invalid_argument("smoothed_relu: b_sigma must be > 0");
    return 0.5 * (x + std::sqrt(x * x + b_sigma));
}

// sigma'(x) = 1/2 + x / (2 sqrt(x^2 + b)), always in (0, 1).
inline double smoothed_relu_deriv(double x, double b_sigma) {
    if (!(b_sigma > 0.0)) throw std::invalid_argument("smoothed_relu_deriv: b_sigma must be > 0");
    return 0.5 + 0.5 * x / std::sqrt(x * x + b_sigma);
}

// Frozen classifier that telescopes an integer bit-count into its parity:
// yhat = 1 + sum_{i=1..k} (-1)^i (8i-4) sigma(k*vstar1 + 0.5 - i).
struct FixedTelescopingHead {
    int k = 1;
    double b_sigma = 1e-6;
};

double fixed_head_forward(double vstar1, const FixedTelescopingHead& head);

// d yhat / d vstar1
double fixed_head_slope(double vstar1, const FixedTelescopingHead& head);

// One-hidden-layer network on the 4-d attention vector, smoothed-ReLU
// activation. Flat parameter layout (used by training and gradient checks):
// [beta_i (4), b_i, alpha_i] for i = 1..q, then the output bias.
struct TrainableFFNN1 {
    int q = 0;
    std::vector<Vec4> hidden_w;     // beta_i
    std::vector<double> hidden_b;   // b_i
    std::vector<double> out_w;      // alpha_i
    double out_b = 0.0;
    double b_sigma = 1e-6;

    static TrainableFFNN1 zeros(int q, double b_sigma = 1e-6);
    static TrainableFFNN1 random_init(int q, std::uint64_t seed, double scale = 0.5,
                                      double b_sigma = 1e-6);

    double alpha_norm() const;  // ||alpha||_2
    double beta_norm() const;   // Frobenius norm of the q x 4 hidden weights

    int flat_dim() const { return 6 * q + 1; }
    void to_flat(std::span<double> out) const;
    void from_flat(std::span<const double> in);
};

double ffnn1_forward(const Vec4& v, const TrainableFFNN1& net);

// d yhat / d theta in the flat layout, for a fixed input vector v.
void ffnn1_param_gradient(const Vec4& v, const TrainableFFNN1& net, std::span<double> out);

// Exact parity via ReLU telescoping on the raw bits:
// h_B(x) = 1 + sum_{j=1..k} (-1)^j (8j-4) ReLU(sum_{p in B} x_p + 0.5 - j).
struct ReLUParityNet {
    std::vector<int> support;  // B, 1-based positions
};

double relu_parity_forward(const BitString& x, const ReLUParityNet& net);

// Published parameter-counting conventions. ReLU net: k hidden biases +
// k output weights + the shared input weight + the output bias = 2k+2.
// Aligned-head transformer: 16 entries per head plus the same classifier
// counting = 18k+2. FFNN-1: per-neuron [beta_i, b_i or alpha_i] + output
// bias = 5q+1 (the hidden bias / output weight pair is counted once).
int parameter_count(const ReLUParityNet& net);
int parameter_count(const TrainableFFNN1& net);
int aligned_transformer_parameter_count(int k);

}  // namespace paritylab
