#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "paritylab/attention.hpp"
#include "paritylab/bitstring.hpp"
#include "paritylab/heads.hpp"
#include "paritylab/risk.hpp"

namespace paritylab {

// One numeric certificate: the worst case observed over every probed pair
// (never an average) against the theoretical bound when one exists.
struct ProbeReport {
    std::string probe;
    long samples = 0;
    double observed = 0.0;
    double bound = 0.0;
    bool pass = false;
};

// max |yhat(A) - yhat(A')| / ||A - A'|| over random parameter pairs and
// random inputs, checked against (8k^2/tau) * sqrt(2k). Also probes the
// per-coordinate bound 8k^2/tau with single-coordinate perturbations.
ProbeReport lipschitz_probe_yhat(const ParitySpec& spec, double tau, double b_sigma, int trials,
                                 std::uint64_t seed);
ProbeReport lipschitz_partial_probe(const ParitySpec& spec, double tau, double b_sigma, int trials,
                                    std::uint64_t seed);

// max ||grad yhat(A) - grad yhat(A')|| / ||A - A'|| against
// 2k * (20/tau^2 + 32k^2/(tau^2 sqrt(b))), plus the per-entry second
// difference against 20/tau^2 + 32k^2/(tau^2 sqrt(b)).
ProbeReport smoothness_probe(const ParitySpec& spec, double tau, double b_sigma, int trials,
                             std::uint64_t seed);
ProbeReport smoothness_partial_probe(const ParitySpec& spec, double tau, double b_sigma, int trials,
                                     std::uint64_t seed);

// Lipschitz probe for yhat * grad yhat with the |yhat| <= 4k^3 premise
// verified on every sample before the bound is asserted.
ProbeReport ygrady_lipschitz_probe(const ParitySpec& spec, double tau, double b_sigma, int trials,
                                   std::uint64_t seed);

// Most negative per-head correlation <dl_N, dl_M> over input pairs;
// exhaustive for n <= 10, sampled above. Flags values below -1e-9.
ProbeReport grad_correlation_probe(const AttentionHeads& heads, const FixedTelescopingHead& clf,
                                   const ParitySpec& spec, std::uint64_t seed = 1,
                                   long sample_pairs = 100000);

// min_t pl_ratio over trajectory steps with risk >= epsilon; asserts strict
// positivity and reports the theoretical floor min{64*mu1, mu2}/2^(n+1)
// with mu1 = 2 c2^2 tau^2 / n^2 and mu2 = 64 k^2 c2^2 / n^2.
ProbeReport pl_constant_probe(const TrajectoryLog& trajectory, int n, int k, double tau,
                              double epsilon, double c2);

// Measured softmax floor constant: min over heads of the smaller
// neighbor-of-argmax score divided by tau.
double measure_c2(const AttentionHeads& heads, const EmbeddingTable& table);

struct HeadAttentionSummary {
    int head = 0;
    int argmax_pos = 0;
    double top_gamma = 0.0;
};

struct SoftHardReport {
    bool applicable = false;  // true iff no two parity bits are adjacent
    bool pass = false;
    double soft_risk = 0.0;
    double hard_risk = 0.0;
    std::vector<HeadAttentionSummary> heads;
    // Per parity bit: head with gamma > 1/2 on it, or 0 if none.
    std::vector<int> covering_head;
    // Adjacent-bit regime: midpoint angles matched by some head.
    std::vector<double> midpoint_angles;
    std::vector<bool> midpoint_matched;
};

// Evaluates the trained heads under hard attention. With no adjacent parity
// bits, asserts hard risk < epsilon and that every parity bit is some head's
// argmax with gamma > 1/2. With adjacent bits, reports whether some head's
// angle lies within 2*pi*0.75/n of each pair's midpoint angle instead.
SoftHardReport soft_to_hard_check(const AttentionHeads& heads, const FixedTelescopingHead& clf,
                                  const ParitySpec& spec, double epsilon);

struct CertificateReport {
    int position = 0;  // adversarial position p
    ProbeReport flip_invariance;
    ProbeReport coverage;   // |X'| / 2^n vs the lower bound
    ProbeReport score_cap;  // census only: max gamma_p on certified inputs
};

// Hard-attention certificate: exhaustively verifies that every member of X'
// (each head's prefix contains its token maximizer) selects identical
// positions on x and flip_bit(x, p), and that |X'|/2^n >= 1 - 2m/2^ceil((n-1)/m).
CertificateReport corollary20_certificate(std::span<const GeneralAttentionMatrix> heads, int n);

// Counting census for the soft lower bound: membership needs at least
// n/(5m) maximizers inside each head's prefix; asserts
// |X'|/2^n >= 1 - 2m/2^ceil((n-1)/(5m)) and the per-member attention cap
// gamma_p <= 1/(n/(5m)+1) at tau = 1.
CertificateReport theorem2_census(std::span<const GeneralAttentionMatrix> heads, int n);

// Membership helpers shared by the certificates (exposed for property tests).
bool xprime_member_exists(const BitString& x, std::span<const GeneralAttentionMatrix> heads,
                          std::span<const std::vector<int>> perms, std::span<const int> maximizers,
                          int prefix_len);
bool xprime_member_count(const BitString& x, std::span<const GeneralAttentionMatrix> heads,
                         std::span<const std::vector<int>> perms, std::span<const int> maximizers,
                         int prefix_len, double threshold);

}  // namespace paritylab
