#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "seqlrp/nn/matrix.hpp"

namespace seqlrp::lrp {

using nn::Matrix;

/// Relevance passed to a single input, plus the amount that did not reach
/// it: bias shares, the epsilon stabilizer's share, and for non-conservative
/// rules the remainder. For every rule sum(R_in) + absorbed == sum(R_out).
struct RuleResult {
  Matrix relevance;
  double absorbed = 0.0;
};

struct PairResult {
  Matrix first;
  Matrix second;
  double absorbed = 0.0;
};

/// z + eps * sign(z), with sign(0) = +1.
double stabilize(double z, double eps);

/// Epsilon rule for z = x W + b (rows of x are independent samples):
/// R_in[i,k] = x[i,k] * sum_j W[k,j] R_out[i,j] / stab(z[i,j]).
/// The bias is recovered as z - x W and its share is absorbed.
RuleResult rule_eps_linear(const Matrix& x, const Matrix& w, const Matrix& z, const Matrix& r_out, double eps);

/// Epsilon rule for the zero-padded 1-D convolution (weights one row per
/// filter, column tap * channels + channel).
RuleResult rule_eps_conv(const Matrix& x, const Matrix& w, std::size_t width, const Matrix& z, const Matrix& r_out,
                         double eps);

/// Uniform split for an elementwise product z = a * b: R_a = R_b = R_out / 2.
PairResult rule_uniform_product(const Matrix& a, const Matrix& b, const Matrix& r_out);

/// Z = A V. Half of each output's relevance goes to each factor, spread in
/// proportion to the summands A[i,k] V[k,j] / stab(Z[i,j]).
PairResult rule_bilinear_matmul(const Matrix& a, const Matrix& v, const Matrix& z, const Matrix& r_out, double eps);

/// S = scale * Q K^T, the same uniform bilinear rule with V = scale * K^T.
PairResult rule_scores(const Matrix& q, const Matrix& k, double scale, const Matrix& s, const Matrix& r_out,
                       double eps);

/// Epsilon rule on a two-term sum z = a + b: R_a = a / stab(z) * R_out, and
/// likewise for b. Used for residual connections.
PairResult rule_sum(const Matrix& a, const Matrix& b, const Matrix& r_out, double eps);

/// z = a + c with c constant: a's epsilon share is kept, c's share is
/// absorbed. Entries where c = -inf (masked) pass no relevance.
RuleResult rule_add_constant(const Matrix& a, const Matrix& c, const Matrix& r_out, double eps);

/// Row-wise softmax s = softmax(x): R_in_i = x_i (R_out_i - s_i sum_j R_out_j).
/// Masked entries (x = -inf, s = 0) receive zero.
RuleResult rule_softmax(const Matrix& x, const Matrix& s, const Matrix& r_out);

/// Layer norm y = gamma (x - mean) / sigma + beta with sigma held constant:
/// the epsilon rule on the resulting affine map, beta absorbed as a bias.
/// Throws NumericalError if any sigma is zero.
RuleResult rule_layernorm(const Matrix& x, std::span<const double> mean, std::span<const double> sigma,
                          const Matrix& gamma, const Matrix& beta, const Matrix& r_out, double eps);

/// Winner-take-all routing; winners[o * cols + c] is the input row of output (o, c).
RuleResult rule_maxpool(const Matrix& x, std::span<const std::size_t> winners, const Matrix& r_out);

}  // namespace seqlrp::lrp
