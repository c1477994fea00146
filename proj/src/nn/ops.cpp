#include "seqlrp/nn/ops.hpp"

#include <cmath>
#include <cstdlib>

#include "seqlrp/error.hpp"

namespace seqlrp::nn {

double alibi_slope(std::size_t head, std::size_t heads) {
  return std::exp2(-8.0 * static_cast<double>(head) / static_cast<double>(heads));
}

std::vector<Matrix> alibi_bias(std::size_t heads, std::size_t length) {
  if (heads == 0 || length == 0) throw std::invalid_argument("alibi_bias: heads and length must be >= 1");
  std::vector<Matrix> out;
  out.reserve(heads);
  for (std::size_t h = 1; h <= heads; ++h) {
    const double m = alibi_slope(h, heads);
    Matrix b(length, length);
    for (std::size_t j = 0; j < length; ++j)
      for (std::size_t k = 0; k < length; ++k)
        b(j, k) = -m * std::abs(static_cast<double>(j) - static_cast<double>(k));
    out.push_back(std::move(b));
  }
  return out;
}

AttentionNodes attention_forward(Tape& tape, NodeId q, NodeId k, NodeId v, const Matrix& bias) {
  const Matrix& qv = tape.value(q);
  const Matrix& kv = tape.value(k);
  const Matrix& vv = tape.value(v);
  if (qv.cols() != kv.cols() || kv.rows() != vv.rows() || qv.rows() != kv.rows())
    throw ShapeError("attention_forward: Q/K/V shapes disagree");
  if (bias.rows() != qv.rows() || bias.cols() != kv.rows())
    throw ShapeError("attention_forward: bias must be L x L");
  AttentionNodes n{};
  n.scores = tape.scores(q, k, 1.0 / std::sqrt(static_cast<double>(qv.cols())));
  n.biased = tape.add_constant(n.scores, bias);
  n.weights = tape.softmax(n.biased);
  n.output = tape.matmul(n.weights, v);
  return n;
}

GluNodes glu_forward(Tape& tape, NodeId x, ParamId w_gate, ParamId w_content, std::optional<ParamId> b_gate,
                     std::optional<ParamId> b_content) {
  const ParamStore& ps = tape.params();
  if (ps.value(w_gate).rows() != ps.value(w_content).rows() || ps.value(w_gate).cols() != ps.value(w_content).cols())
    throw ShapeError("glu_forward: gate and content weights differ in shape");
  GluNodes n{};
  n.gate_pre = tape.linear(x, w_gate, b_gate);
  n.gate = tape.gelu(n.gate_pre);
  n.content = tape.linear(x, w_content, b_content);
  n.output = tape.mul(n.gate, n.content);
  return n;
}

NodeId conv1d_forward(Tape& tape, NodeId x, ParamId filters, std::optional<ParamId> bias, std::size_t width) {
  return tape.conv1d(x, filters, bias, width);
}

LayerNormStats layer_norm_stats(const Matrix& x, double eps) {
  LayerNormStats st;
  const double n = static_cast<double>(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mean = 0.0;
    for (double v : x.row(i)) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x.row(i)) var += (v - mean) * (v - mean);
    st.mean.push_back(mean);
    st.sigma.push_back(std::sqrt(var / n + eps));
  }
  return st;
}

}  // namespace seqlrp::nn
