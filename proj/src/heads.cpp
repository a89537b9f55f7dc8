#include "paritylab/heads.hpp"

#include <algorithm>
#include <cmath>

#include "paritylab/rng.hpp"

namespace paritylab {

double fixed_head_forward(double vstar1, const FixedTelescopingHead& head) {
    double y = 1.0;
    for (int i = 1; i <= head.k; ++i) {
        const double weight = (i % 2 ? -1.0 : 1.0) * (8.0 * i - 4.0);
        y += weight * smoothed_relu(head.k * vstar1 + 0.5 - i, head.b_sigma);
    }
    return y;
}

double fixed_head_slope(double vstar1, const FixedTelescopingHead& head) {
    double slope = 0.0;
    for (int i = 1; i <= head.k; ++i) {
        const double weight = (i % 2 ? -1.0 : 1.0) * (8.0 * i - 4.0);
        slope += weight * smoothed_relu_deriv(head.k * vstar1 + 0.5 - i, head.b_sigma);
    }
    return head.k * slope;
}

TrainableFFNN1 TrainableFFNN1::zeros(int q, double b_sigma) {
    TrainableFFNN1 net;
    net.q = q;
    net.hidden_w.assign(static_cast<std::size_t>(q), Vec4{0.0, 0.0, 0.0, 0.0});
    net.hidden_b.assign(static_cast<std::size_t>(q), 0.0);
    net.out_w.assign(static_cast<std::size_t>(q), 0.0);
    net.out_b = 0.0;
    net.b_sigma = b_sigma;
    return net;
}

TrainableFFNN1 TrainableFFNN1::random_init(int q, std::uint64_t seed, double scale, double b_sigma) {
    TrainableFFNN1 net = zeros(q, b_sigma);
    Rng rng(seed);
    for (int i = 0; i < q; ++i) {
        for (int d = 0; d < 4; ++d) {
            net.hidden_w[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] = rng.uniform(-scale, scale);
        }
        net.hidden_b[static_cast<std::size_t>(i)] = rng.uniform(-scale, scale);
        net.out_w[static_cast<std::size_t>(i)] = rng.uniform(-scale, scale);
    }
    return net;
}

double TrainableFFNN1::alpha_norm() const {
    double s = 0.0;
    for (double a : out_w) s += a * a;
    return std::sqrt(s);
}

double TrainableFFNN1::beta_norm() const {
    double s = 0.0;
    for (const auto& row : hidden_w) {
        for (double w : row) s += w * w;
    }
    return std::sqrt(s);
}

void TrainableFFNN1::to_flat(std::span<double> out) const {
    std::size_t idx = 0;
    for (int i = 0; i < q; ++i) {
        for (int d = 0; d < 4; ++d) out[idx++] = hidden_w[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
        out[idx++] = hidden_b[static_cast<std::size_t>(i)];
        out[idx++] = out_w[static_cast<std::size_t>(i)];
    }
    out[idx] = out_b;
}

void TrainableFFNN1::from_flat(std::span<const double> in) {
    std::size_t idx = 0;
    for (int i = 0; i < q; ++i) {
        for (int d = 0; d < 4; ++d) hidden_w[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] = in[idx++];
        hidden_b[static_cast<std::size_t>(i)] = in[idx++];
        out_w[static_cast<std::size_t>(i)] = in[idx++];
    }
    out_b = in[idx];
}

double ffnn1_forward(const Vec4& v, const TrainableFFNN1& net) {
    double y = net.out_b;
    for (int i = 0; i < net.q; ++i) {
        double h = net.hidden_b[static_cast<std::size_t>(i)];
        for (int d = 0; d < 4; ++d) {
            h += net.hidden_w[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] * v[static_cast<std::size_t>(d)];
        }
        y += net.out_w[static_cast<std::size_t>(i)] * smoothed_relu(h, net.b_sigma);
    }
    return y;
}

void ffnn1_param_gradient(const Vec4& v, const TrainableFFNN1& net, std::span<double> out) {
    std::size_t idx = 0;
    for (int i = 0; i < net.q; ++i) {
        double h = net.hidden_b[static_cast<std::size_t>(i)];
        for (int d = 0; d < 4; ++d) {
            h += net.hidden_w[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] * v[static_cast<std::size_t>(d)];
        }
        const double act = smoothed_relu(h, net.b_sigma);
        const double dact = smoothed_relu_deriv(h, net.b_sigma);
        const double alpha = net.out_w[static_cast<std::size_t>(i)];
        for (int d = 0; d < 4; ++d) out[idx++] = alpha * dact * v[static_cast<std::size_t>(d)];  // d/d beta_i
        out[idx++] = alpha * dact;                                                               // d/d b_i
        out[idx++] = act;                                                                        // d/d alpha_i
    }
    out[idx] = 1.0;  // d/d out_b
}

double relu_parity_forward(const BitString& x, const ReLUParityNet& net) {
    int ones = 0;
    for (int p : net.support) {
        ones += x.bit(p);  // throws on out-of-range positions
    }
    const int k = static_cast<int>(net.support.size());
    double y = 1.0;
    for (int j = 1; j <= k; ++j) {
        const double weight = (j % 2 ? -1.0 : 1.0) * (8.0 * j - 4.0);
        const double arg = ones + 0.5 - j;
        if (arg > 0.0) y += weight * arg;
    }
    return y;
}

int parameter_count(const ReLUParityNet& net) {
    return 2 * static_cast<int>(net.support.size()) + 2;
}

int parameter_count(const TrainableFFNN1& net) { return 5 * net.q + 1; }

int aligned_transformer_parameter_count(int k) { return 18 * k + 2; }

}  // namespace paritylab
