#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "seqlrp/nn/matrix.hpp"
#include "seqlrp/nn/params.hpp"

namespace seqlrp::nn {

using NodeId = std::size_t;

enum class OpKind {
  Input,
  Embedding,
  Linear,
  Conv1d,
  Add,
  AddConstant,
  LayerNorm,
  Scores,
  MatMul,
  Softmax,
  Gelu,
  Relu,
  Mul,
  MaxPool,
  SliceCols,
  ConcatCols,
  SelectRow,
};

std::string_view to_string(OpKind kind);

struct NoAttrs {};
struct EmbeddingAttrs {
  ParamId table;
  std::vector<int> ids;
};
struct LinearAttrs {
  ParamId weight;
  std::optional<ParamId> bias;
};
/// Weight layout: one row per filter, column index tap * channels + channel.
struct ConvAttrs {
  ParamId weight;
  std::optional<ParamId> bias;
  std::size_t width;
};
struct ConstantAttrs {
  Matrix constant;
};
struct LayerNormAttrs {
  ParamId gamma;
  ParamId beta;
  double eps;
  std::vector<double> mean;
  std::vector<double> sigma;
};
struct ScoresAttrs {
  double scale;
};
/// Non-overlapping windows along rows; the last window may be partial.
/// winners[o * cols + c] is the input row that produced output (o, c).
struct PoolAttrs {
  std::size_t width;
  std::vector<std::size_t> winners;
};
struct SliceAttrs {
  std::size_t begin;
  std::size_t count;
};
struct RowAttrs {
  std::size_t row;
};

using OpAttrs = std::variant<NoAttrs, EmbeddingAttrs, LinearAttrs, ConvAttrs, ConstantAttrs,
                             LayerNormAttrs, ScoresAttrs, PoolAttrs, SliceAttrs, RowAttrs>;

struct Record {
  OpKind kind;
  std::vector<NodeId> inputs;
  OpAttrs attrs;
  Matrix value;
};

/// Append-only record of a forward pass. Every record only refers to
/// earlier records, so the tape is topologically ordered by construction.
/// Parameter values are read through the bound store, which must outlive
/// the tape.
class Tape {
 public:
  Tape() = default;
  explicit Tape(const ParamStore& params) : params_(&params) {}

  NodeId input(Matrix x);
  NodeId embedding(ParamId table, std::span<const int> ids);
  NodeId linear(NodeId x, ParamId weight, std::optional<ParamId> bias = std::nullopt);
  NodeId conv1d(NodeId x, ParamId weight, std::optional<ParamId> bias, std::size_t width);
  NodeId add(NodeId a, NodeId b);
  NodeId add_constant(NodeId a, Matrix constant);
  NodeId layer_norm(NodeId x, ParamId gamma, ParamId beta, double eps);
  /// scale * Q K^T
  NodeId scores(NodeId q, NodeId k, double scale);
  NodeId matmul(NodeId a, NodeId b);
  NodeId softmax(NodeId x);
  NodeId gelu(NodeId x);
  NodeId relu(NodeId x);
  NodeId mul(NodeId a, NodeId b);
  NodeId max_pool(NodeId x, std::size_t width);
  NodeId slice_cols(NodeId x, std::size_t begin, std::size_t count);
  NodeId concat_cols(std::span<const NodeId> parts);
  NodeId select_row(NodeId x, std::size_t row);
  /// Appends a prebuilt record; its inputs must already be on the tape.
  NodeId append(Record rec);

  std::size_t size() const noexcept { return records_.size(); }
  const Record& record(NodeId id) const { return records_.at(id); }
  const Matrix& value(NodeId id) const { return records_.at(id).value; }
  std::span<const Record> records() const noexcept { return records_; }
  const ParamStore& params() const;
  bool has_params() const noexcept { return params_ != nullptr; }

 private:
  NodeId push(OpKind kind, std::vector<NodeId> inputs, OpAttrs attrs, Matrix value);

  const ParamStore* params_ = nullptr;
  std::vector<Record> records_;
};

/// Recomputes a record's output from the recorded values of its inputs.
Matrix recompute(const Tape& tape, NodeId id);

// Pointwise helpers shared by forward and backward passes.
double gelu(double x);
double gelu_derivative(double x);
double normal_cdf(double x);

/// Row-wise softmax; -inf entries map to exactly 0.
Matrix softmax_rows(const Matrix& x);

}  // namespace seqlrp::nn
