#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "seqlrp/nn/matrix.hpp"
#include "seqlrp/nn/tape.hpp"

namespace seqlrp::nn {

/// Geometric ALiBi slope 2^(-8 * head / heads) for a 1-based head index.
double alibi_slope(std::size_t head, std::size_t heads);

/// Symmetric ALiBi bias, one L x L matrix per head: bias[j][k] = -m_h * |j - k|.
std::vector<Matrix> alibi_bias(std::size_t heads, std::size_t length);

/// Node ids of the records written by one attention call.
struct AttentionNodes {
  NodeId scores;   // Q K^T / sqrt(d)
  NodeId biased;   // scores + bias
  NodeId weights;  // row softmax
  NodeId output;   // weights * V
};

/// Scaled dot-product attention with an additive bias (ALiBi and/or key mask).
AttentionNodes attention_forward(Tape& tape, NodeId q, NodeId k, NodeId v, const Matrix& bias);

struct GluNodes {
  NodeId gate_pre;
  NodeId gate;     // GELU(x W_gate)
  NodeId content;  // x W_content
  NodeId output;   // gate * content
};

/// GEGLU feed-forward branch: GELU(x W_gate + b_gate) * (x W_content + b_content).
GluNodes glu_forward(Tape& tape, NodeId x, ParamId w_gate, ParamId w_content,
                     std::optional<ParamId> b_gate = std::nullopt,
                     std::optional<ParamId> b_content = std::nullopt);

/// Zero-padded, length-preserving cross-correlation over the input channels.
NodeId conv1d_forward(Tape& tape, NodeId x, ParamId filters, std::optional<ParamId> bias,
                      std::size_t width);

/// Per-row mean and standard deviation as used by layer normalization.
struct LayerNormStats {
  std::vector<double> mean;
  std::vector<double> sigma;
};
LayerNormStats layer_norm_stats(const Matrix& x, double eps);

}  // namespace seqlrp::nn
