#include "seqlrp/nn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "seqlrp/error.hpp"

namespace seqlrp::nn {

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::Input: return "input";
    case OpKind::Embedding: return "embedding";
    case OpKind::Linear: return "linear";
    case OpKind::Conv1d: return "conv1d";
    case OpKind::Add: return "add";
    case OpKind::AddConstant: return "add_constant";
    case OpKind::LayerNorm: return "layer_norm";
    case OpKind::Scores: return "scores";
    case OpKind::MatMul: return "matmul";
    case OpKind::Softmax: return "softmax";
    case OpKind::Gelu: return "gelu";
    case OpKind::Relu: return "relu";
    case OpKind::Mul: return "mul";
    case OpKind::MaxPool: return "max_pool";
    case OpKind::SliceCols: return "slice_cols";
    case OpKind::ConcatCols: return "concat_cols";
    case OpKind::SelectRow: return "select_row";
  }
  return "unknown";
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double gelu(double x) { return x * normal_cdf(x); }

double gelu_derivative(double x) {
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return normal_cdf(x) + x * pdf;
}

Matrix softmax_rows(const Matrix& x) {
  Matrix s(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto in = x.row(i);
    auto out = s.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    if (!std::isfinite(mx)) throw NumericalError("softmax: row without a finite entry");
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      out[j] = std::exp(in[j] - mx);
      total += out[j];
    }
    for (double& v : out) v /= total;
  }
  return s;
}

namespace {

Matrix compute_linear(const Matrix& x, const Matrix& w, const Matrix* b) {
  if (x.cols() != w.rows()) throw ShapeError("linear: input width does not match weight rows");
  Matrix z = matmul(x, w);
  if (b != nullptr) {
    if (b->rows() != 1 || b->cols() != w.cols()) throw ShapeError("linear: bad bias shape");
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += (*b)(0, j);
  }
  return z;
}

Matrix compute_conv(const Matrix& x, const Matrix& w, const Matrix* b, std::size_t width) {
  const std::size_t len = x.rows();
  const std::size_t channels = x.cols();
  if (width % 2 == 0) throw ShapeError("conv1d: width must be odd");
  if (width > len) throw ShapeError("conv1d: width exceeds sequence length");
  if (w.cols() != width * channels) throw ShapeError("conv1d: weight columns must be width * channels");
  if (b != nullptr && (b->rows() != 1 || b->cols() != w.rows())) throw ShapeError("conv1d: bad bias shape");
  const std::size_t half = width / 2;
  Matrix z(len, w.rows());
  for (std::size_t pos = 0; pos < len; ++pos) {
    for (std::size_t f = 0; f < w.rows(); ++f) {
      auto filt = w.row(f);
      double s = b != nullptr ? (*b)(0, f) : 0.0;
      for (std::size_t t = 0; t < width; ++t) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(pos + t) - static_cast<std::ptrdiff_t>(half);
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
        auto xr = x.row(static_cast<std::size_t>(src));
        for (std::size_t c = 0; c < channels; ++c) s += filt[t * channels + c] * xr[c];
      }
      z(pos, f) = s;
    }
  }
  return z;
}

Matrix compute_layer_norm(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps,
                          std::vector<double>* mean_out, std::vector<double>* sigma_out) {
  if (gamma.rows() != 1 || gamma.cols() != x.cols() || !gamma.same_shape(beta))
    throw ShapeError("layer_norm: gamma/beta must be 1 x width");
  Matrix y(x.rows(), x.cols());
  const double n = static_cast<double>(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : r) var += (v - mean) * (v - mean);
    var /= n;
    const double sigma = std::sqrt(var + eps);
    if (sigma == 0.0) throw NumericalError("layer_norm: zero variance with eps = 0");
    for (std::size_t j = 0; j < r.size(); ++j) y(i, j) = gamma(0, j) * (r[j] - mean) / sigma + beta(0, j);
    if (mean_out) mean_out->push_back(mean);
    if (sigma_out) sigma_out->push_back(sigma);
  }
  return y;
}

Matrix compute_pool(const Matrix& x, std::size_t width, std::vector<std::size_t>* winners) {
  if (width == 0) throw ShapeError("max_pool: zero width");
  const std::size_t out_rows = (x.rows() + width - 1) / width;
  Matrix y(out_rows, x.cols());
  if (winners) winners->assign(out_rows * x.cols(), 0);
  for (std::size_t o = 0; o < out_rows; ++o) {
    const std::size_t lo = o * width;
    const std::size_t hi = std::min(x.rows(), lo + width);
    for (std::size_t c = 0; c < x.cols(); ++c) {
      std::size_t best = lo;
      for (std::size_t r = lo + 1; r < hi; ++r) {
        if (x(r, c) > x(best, c)) best = r;  // strict: ties keep the earliest row
      }
      y(o, c) = x(best, c);
      if (winners) (*winners)[o * x.cols() + c] = best;
    }
  }
  return y;
}

template <typename F>
Matrix map(const Matrix& x, F f) {
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return y;
}

Matrix elementwise_add(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeError("add: shape mismatch");
  Matrix c = a;
  c += b;
  return c;
}

Matrix compute_embedding(const Matrix& table, std::span<const int> ids) {
  Matrix y(ids.size(), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= table.rows())
      throw std::out_of_range("embedding: token id " + std::to_string(ids[i]) + " out of range");
    auto src = table.row(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), y.row(i).begin());
  }
  return y;
}

Matrix compute_scores(const Matrix& q, const Matrix& k, double scale) {
  if (q.cols() != k.cols()) throw ShapeError("scores: query/key width mismatch");
  Matrix s = matmul_nt(q, k);
  s *= scale;
  return s;
}

Matrix compute_slice(const Matrix& x, std::size_t begin, std::size_t count) {
  if (begin + count > x.cols()) throw ShapeError("slice_cols: range out of bounds");
  Matrix y(x.rows(), count);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) y(i, j) = x(i, begin + j);
  return y;
}

Matrix compute_concat(const std::vector<const Matrix*>& parts) {
  std::size_t cols = 0;
  for (const Matrix* p : parts) {
    if (p->rows() != parts.front()->rows()) throw ShapeError("concat_cols: row mismatch");
    cols += p->cols();
  }
  Matrix y(parts.front()->rows(), cols);
  std::size_t off = 0;
  for (const Matrix* p : parts) {
    for (std::size_t i = 0; i < p->rows(); ++i)
      for (std::size_t j = 0; j < p->cols(); ++j) y(i, off + j) = (*p)(i, j);
    off += p->cols();
  }
  return y;
}

Matrix compute_select_row(const Matrix& x, std::size_t row) {
  if (row >= x.rows()) throw ShapeError("select_row: row out of range");
  return Matrix::row_vector(x.row(row));
}

const Matrix* optional_param(const ParamStore& ps, const std::optional<ParamId>& id) {
  return id ? &ps.value(*id) : nullptr;
}

}  // namespace

const ParamStore& Tape::params() const {
  if (params_ == nullptr) throw std::logic_error("tape has no bound parameter store");
  return *params_;
}

NodeId Tape::push(OpKind kind, std::vector<NodeId> inputs, OpAttrs attrs, Matrix value) {
  records_.push_back(Record{kind, std::move(inputs), std::move(attrs), std::move(value)});
  return records_.size() - 1;
}

NodeId Tape::input(Matrix x) { return push(OpKind::Input, {}, NoAttrs{}, std::move(x)); }

NodeId Tape::embedding(ParamId table, std::span<const int> ids) {
  Matrix y = compute_embedding(params().value(table), ids);
  return push(OpKind::Embedding, {}, EmbeddingAttrs{table, {ids.begin(), ids.end()}}, std::move(y));
}

NodeId Tape::linear(NodeId x, ParamId weight, std::optional<ParamId> bias) {
  Matrix z = compute_linear(value(x), params().value(weight), optional_param(params(), bias));
  return push(OpKind::Linear, {x}, LinearAttrs{weight, bias}, std::move(z));
}

NodeId Tape::conv1d(NodeId x, ParamId weight, std::optional<ParamId> bias, std::size_t width) {
  Matrix z = compute_conv(value(x), params().value(weight), optional_param(params(), bias), width);
  return push(OpKind::Conv1d, {x}, ConvAttrs{weight, bias, width}, std::move(z));
}

NodeId Tape::add(NodeId a, NodeId b) {
  return push(OpKind::Add, {a, b}, NoAttrs{}, elementwise_add(value(a), value(b)));
}

NodeId Tape::add_constant(NodeId a, Matrix constant) {
  Matrix y = elementwise_add(value(a), constant);
  return push(OpKind::AddConstant, {a}, ConstantAttrs{std::move(constant)}, std::move(y));
}

NodeId Tape::layer_norm(NodeId x, ParamId gamma, ParamId beta, double eps) {
  LayerNormAttrs attrs{gamma, beta, eps, {}, {}};
  Matrix y = compute_layer_norm(value(x), params().value(gamma), params().value(beta), eps, &attrs.mean,
                                &attrs.sigma);
  return push(OpKind::LayerNorm, {x}, std::move(attrs), std::move(y));
}

NodeId Tape::scores(NodeId q, NodeId k, double scale) {
  return push(OpKind::Scores, {q, k}, ScoresAttrs{scale}, compute_scores(value(q), value(k), scale));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  return push(OpKind::MatMul, {a, b}, NoAttrs{}, nn::matmul(value(a), value(b)));
}

NodeId Tape::softmax(NodeId x) { return push(OpKind::Softmax, {x}, NoAttrs{}, softmax_rows(value(x))); }

NodeId Tape::gelu(NodeId x) {
  return push(OpKind::Gelu, {x}, NoAttrs{}, map(value(x), [](double v) { return nn::gelu(v); }));
}

NodeId Tape::relu(NodeId x) {
  return push(OpKind::Relu, {x}, NoAttrs{}, map(value(x), [](double v) { return v > 0.0 ? v : 0.0; }));
}

NodeId Tape::mul(NodeId a, NodeId b) {
  return push(OpKind::Mul, {a, b}, NoAttrs{}, hadamard(value(a), value(b)));
}

NodeId Tape::max_pool(NodeId x, std::size_t width) {
  PoolAttrs attrs{width, {}};
  Matrix y = compute_pool(value(x), width, &attrs.winners);
  return push(OpKind::MaxPool, {x}, std::move(attrs), std::move(y));
}

NodeId Tape::slice_cols(NodeId x, std::size_t begin, std::size_t count) {
  return push(OpKind::SliceCols, {x}, SliceAttrs{begin, count}, compute_slice(value(x), begin, count));
}

NodeId Tape::concat_cols(std::span<const NodeId> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  std::vector<const Matrix*> mats;
  for (NodeId p : parts) mats.push_back(&value(p));
  return push(OpKind::ConcatCols, {parts.begin(), parts.end()}, NoAttrs{}, compute_concat(mats));
}

NodeId Tape::select_row(NodeId x, std::size_t row) {
  return push(OpKind::SelectRow, {x}, RowAttrs{row}, compute_select_row(value(x), row));
}

NodeId Tape::append(Record rec) {
  for (NodeId in : rec.inputs)
    if (in >= records_.size()) throw std::invalid_argument("Tape::append: input refers to a later record");
  return push(rec.kind, std::move(rec.inputs), std::move(rec.attrs), std::move(rec.value));
}

Matrix recompute(const Tape& tape, NodeId id) {
  const Record& rec = tape.record(id);
  auto in = [&](std::size_t i) -> const Matrix& { return tape.value(rec.inputs.at(i)); };
  switch (rec.kind) {
    case OpKind::Input:
      return rec.value;
    case OpKind::Embedding: {
      const auto& a = std::get<EmbeddingAttrs>(rec.attrs);
      return compute_embedding(tape.params().value(a.table), a.ids);
    }
    case OpKind::Linear: {
      const auto& a = std::get<LinearAttrs>(rec.attrs);
      return compute_linear(in(0), tape.params().value(a.weight), optional_param(tape.params(), a.bias));
    }
    case OpKind::Conv1d: {
      const auto& a = std::get<ConvAttrs>(rec.attrs);
      return compute_conv(in(0), tape.params().value(a.weight), optional_param(tape.params(), a.bias), a.width);
    }
    case OpKind::Add:
      return elementwise_add(in(0), in(1));
    case OpKind::AddConstant:
      return elementwise_add(in(0), std::get<ConstantAttrs>(rec.attrs).constant);
    case OpKind::LayerNorm: {
      const auto& a = std::get<LayerNormAttrs>(rec.attrs);
      return compute_layer_norm(in(0), tape.params().value(a.gamma), tape.params().value(a.beta), a.eps, nullptr,
                                nullptr);
    }
    case OpKind::Scores:
      return compute_scores(in(0), in(1), std::get<ScoresAttrs>(rec.attrs).scale);
    case OpKind::MatMul:
      return nn::matmul(in(0), in(1));
    case OpKind::Softmax:
      return softmax_rows(in(0));
    case OpKind::Gelu:
      return map(in(0), [](double v) { return nn::gelu(v); });
    case OpKind::Relu:
      return map(in(0), [](double v) { return v > 0.0 ? v : 0.0; });
    case OpKind::Mul:
      return hadamard(in(0), in(1));
    case OpKind::MaxPool:
      return compute_pool(in(0), std::get<PoolAttrs>(rec.attrs).width, nullptr);
    case OpKind::SliceCols: {
      const auto& a = std::get<SliceAttrs>(rec.attrs);
      return compute_slice(in(0), a.begin, a.count);
    }
    case OpKind::ConcatCols: {
      std::vector<const Matrix*> mats;
      for (NodeId p : rec.inputs) mats.push_back(&tape.value(p));
      return compute_concat(mats);
    }
    case OpKind::SelectRow:
      return compute_select_row(in(0), std::get<RowAttrs>(rec.attrs).row);
  }
  throw std::logic_error("recompute: unhandled op kind");
}

}  // namespace seqlrp::nn
