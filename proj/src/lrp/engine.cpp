#include "seqlrp/lrp/engine.hpp"

#include <stdexcept>
#include <string>

#include "seqlrp/error.hpp"
#include "seqlrp/lrp/rules.hpp"
#include "seqlrp/nn/train.hpp"

namespace seqlrp::lrp {

using nn::Matrix;
using nn::OpKind;

void RuleConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("RuleConfig: epsilon must be > 0");
}

double Propagation::total_absorbed() const {
  double s = 0.0;
  for (double a : absorbed) s += a;
  return s;
}

Matrix output_seed(const Matrix& logits, int target, const RuleConfig& cfg) {
  if (logits.rows() != 1 || logits.cols() != 2 || (target != 0 && target != 1))
    throw ShapeError("output_seed: expected 1 x 2 logits and a binary target");
  Matrix seed(1, 2);
  seed(0, static_cast<std::size_t>(target)) = cfg.start == RuleConfig::Start::Logit
                                                  ? logits(0, static_cast<std::size_t>(target))
                                                  : nn::class_probability(logits, target);
  return seed;
}

Propagation propagate(const nn::Tape& tape, nn::NodeId output, const Matrix& seed, const RuleConfig& cfg) {
  cfg.validate();
  if (!seed.same_shape(tape.value(output))) throw ShapeError("propagate: seed shape mismatch");
  const double eps = cfg.epsilon;
  Propagation p;
  p.relevance.resize(tape.size());
  p.absorbed.assign(tape.size(), 0.0);
  p.relevance[output] = seed;

  auto deposit = [&](nn::NodeId id, const Matrix& r) {
    Matrix& slot = p.relevance[id];
    if (slot.empty()) {
      slot = r;
    } else {
      slot += r;
    }
  };

  for (nn::NodeId id = output + 1; id-- > 0;) {
    if (p.relevance[id].empty()) continue;
    const nn::Record& rec = tape.record(id);
    const Matrix& r = p.relevance[id];
    auto in = [&](std::size_t i) -> const Matrix& { return tape.value(rec.inputs.at(i)); };

    switch (rec.kind) {
      case OpKind::Input:
      case OpKind::Embedding:
        break;  // leaves keep their relevance
      case OpKind::Linear: {
        const auto& a = std::get<nn::LinearAttrs>(rec.attrs);
        auto res = rule_eps_linear(in(0), tape.params().value(a.weight), rec.value, r, eps);
        deposit(rec.inputs[0], res.relevance);
        p.absorbed[id] = res.absorbed;
        break;
      }
      case OpKind::Conv1d: {
        const auto& a = std::get<nn::ConvAttrs>(rec.attrs);
        auto res = rule_eps_conv(in(0), tape.params().value(a.weight), a.width, rec.value, r, eps);
        deposit(rec.inputs[0], res.relevance);
        p.absorbed[id] = res.absorbed;
        break;
      }
      case OpKind::Add: {
        auto res = rule_sum(in(0), in(1), r, eps);
        deposit(rec.inputs[0], res.first);
        deposit(rec.inputs[1], res.second);
        p.absorbed[id] = res.absorbed;
        break;
      }
      case OpKind::AddConstant: {
        auto res = rule_add_constant(in(0), std::get<nn::ConstantAttrs>(rec.attrs).constant, r, eps);
        deposit(rec.inputs[0], res.relevance);
        p.absorbed[id] = res.absorbed;
        break;
      }
      case OpKind::LayerNorm: {
        const auto& a = std::get<nn::LayerNormAttrs>(rec.attrs);
        auto res = rule_layernorm(in(0), a.mean, a.sigma, tape.params().value(a.gamma),
                                  tape.params().value(a.beta), r, eps);
        deposit(rec.inputs[0], res.relevance);
        p.absorbed[id] = res.absorbed;
        break;
      }
      case OpKind::Scores: {
        auto res = rule_scores(in(0), in(1), std::get<nn::ScoresAttrs>(rec.attrs).scale, rec.value, r, eps);
        deposit(rec.inputs[0], res.first);
        deposit(rec.inputs[1], res.second);
        p.absorbed[id] = res.absorbed;
        break;
      }
      case OpKind::MatMul: {
        auto res = rule_bilinear_matmul(in(0), in(1), rec.value, r, eps);
        deposit(rec.inputs[0], res.first);
        deposit(rec.inputs[1], res.second);
        p.absorbed[id] = res.absorbed;
        break;
      }
      case OpKind::Softmax: {
        auto res = rule_softmax(in(0), rec.value, r);
        deposit(rec.inputs[0], res.relevance);
        p.absorbed[id] = res.absorbed;
        break;
      }
      case OpKind::Gelu:
      case OpKind::Relu:
        deposit(rec.inputs[0], r);
        break;
      case OpKind::Mul: {
        auto res = rule_uniform_product(in(0), in(1), r);
        deposit(rec.inputs[0], res.first);
        deposit(rec.inputs[1], res.second);
        break;
      }
      case OpKind::MaxPool: {
        auto res = rule_maxpool(in(0), std::get<nn::PoolAttrs>(rec.attrs).winners, r);
        deposit(rec.inputs[0], res.relevance);
        break;
      }
      case OpKind::SliceCols: {
        const auto& a = std::get<nn::SliceAttrs>(rec.attrs);
        Matrix full(in(0).rows(), in(0).cols());
        for (std::size_t i = 0; i < r.rows(); ++i)
          for (std::size_t j = 0; j < a.count; ++j) full(i, a.begin + j) = r(i, j);
        deposit(rec.inputs[0], full);
        break;
      }
      case OpKind::ConcatCols: {
        std::size_t off = 0;
        for (std::size_t k = 0; k < rec.inputs.size(); ++k) {
          Matrix part(in(k).rows(), in(k).cols());
          for (std::size_t i = 0; i < part.rows(); ++i)
            for (std::size_t j = 0; j < part.cols(); ++j) part(i, j) = r(i, off + j);
          off += part.cols();
          deposit(rec.inputs[k], part);
        }
        break;
      }
      case OpKind::SelectRow: {
        Matrix full(in(0).rows(), in(0).cols());
        const std::size_t row = std::get<nn::RowAttrs>(rec.attrs).row;
        for (std::size_t j = 0; j < r.cols(); ++j) full(row, j) = r(0, j);
        deposit(rec.inputs[0], full);
        break;
      }
      default:
        throw std::logic_error("propagate: no relevance rule for op '" + std::string(nn::to_string(rec.kind)) + "'");
    }
  }
  return p;
}

namespace {

std::vector<double> row_sums(const Matrix& m, std::size_t rows) {
  std::vector<double> out(rows, 0.0);
  if (m.empty()) return out;
  for (std::size_t i = 0; i < rows; ++i)
    for (double v : m.row(i)) out[i] += v;
  return out;
}

}  // namespace

RelevanceMap explain(const models::ToyGlm& model, const seqdata::Tokenized& input, int target,
                     const RuleConfig& cfg, ExplainDiagnostics* diag) {
  if (input.ids.size() != input.partition.size() + 2)
    throw std::invalid_argument("explain: token ids must be [CLS] + one id per partition cell + [SEP]");
  nn::Tape tape(model.params());
  const auto nodes = model.forward_nodes(input.ids, tape);
  const Matrix seed = output_seed(tape.value(nodes.logits), target, cfg);
  const Propagation p = propagate(tape, nodes.logits, seed, cfg);

  RelevanceMap map;
  map.model = "glm";
  map.granularity = Granularity::Token;
  map.target = target;
  map.scores = row_sums(p.relevance[nodes.embedding], input.ids.size());
  map.partition = input.partition;
  map.special.assign(input.ids.size(), false);
  map.special.front() = true;
  map.special.back() = true;
  if (diag) {
    diag->start_relevance = seed.sum();
    diag->absorbed = p.total_absorbed();
  }
  return map;
}

RelevanceMap explain(const models::ToyCnn& model, const seqdata::DnaSequence& seq, int target,
                     const RuleConfig& cfg, ExplainDiagnostics* diag) {
  nn::Tape tape(model.params());
  const auto nodes = model.forward_nodes(seqdata::one_hot_encode(seq), tape);
  const Matrix seed = output_seed(tape.value(nodes.logits), target, cfg);
  const Propagation p = propagate(tape, nodes.logits, seed, cfg);

  RelevanceMap map;
  map.model = "cnn";
  map.granularity = Granularity::Nucleotide;
  map.target = target;
  map.scores = row_sums(p.relevance[nodes.input], seq.length());
  map.partition = seqdata::TokenPartition::singletons(seq.length());
  if (diag) {
    diag->start_relevance = seed.sum();
    diag->absorbed = p.total_absorbed();
  }
  return map;
}

}  // namespace seqlrp::lrp
