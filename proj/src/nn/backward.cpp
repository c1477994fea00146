#include "seqlrp/nn/backward.hpp"

#include <stdexcept>

#include "seqlrp/error.hpp"

namespace seqlrp::nn {

namespace {

Matrix& grad_slot(std::vector<Matrix>& grads, const Tape& tape, NodeId id) {
  Matrix& g = grads[id];
  if (g.empty()) g = Matrix(tape.value(id).rows(), tape.value(id).cols());
  return g;
}

void add_bias_grad(std::vector<Matrix>* pg, const std::optional<ParamId>& bias, const Matrix& dz) {
  if (!pg || !bias) return;
  Matrix& db = (*pg)[*bias];
  for (std::size_t i = 0; i < dz.rows(); ++i)
    for (std::size_t j = 0; j < dz.cols(); ++j) db(0, j) += dz(i, j);
}

}  // namespace

std::vector<Matrix> backward(const Tape& tape, NodeId output, const Matrix& grad_output,
                             std::vector<Matrix>* param_grads) {
  if (!grad_output.same_shape(tape.value(output))) throw ShapeError("backward: gradient shape mismatch");
  if (param_grads && tape.has_params() && param_grads->size() != tape.params().size())
    throw ShapeError("backward: parameter gradient count mismatch");

  std::vector<Matrix> grads(tape.size());
  grads[output] = grad_output;

  for (NodeId id = output + 1; id-- > 0;) {
    if (grads[id].empty()) continue;
    const Record& rec = tape.record(id);
    const Matrix& dy = grads[id];
    auto in_value = [&](std::size_t i) -> const Matrix& { return tape.value(rec.inputs[i]); };
    auto in_grad = [&](std::size_t i) -> Matrix& { return grad_slot(grads, tape, rec.inputs[i]); };

    switch (rec.kind) {
      case OpKind::Input:
        break;
      case OpKind::Embedding: {
        if (!param_grads) break;
        const auto& a = std::get<EmbeddingAttrs>(rec.attrs);
        Matrix& dt = (*param_grads)[a.table];
        for (std::size_t i = 0; i < a.ids.size(); ++i)
          for (std::size_t j = 0; j < dy.cols(); ++j) dt(static_cast<std::size_t>(a.ids[i]), j) += dy(i, j);
        break;
      }
      case OpKind::Linear: {
        const auto& a = std::get<LinearAttrs>(rec.attrs);
        const Matrix& w = tape.params().value(a.weight);
        in_grad(0) += matmul_nt(dy, w);
        if (param_grads) (*param_grads)[a.weight] += matmul_tn(in_value(0), dy);
        add_bias_grad(param_grads, a.bias, dy);
        break;
      }
      case OpKind::Conv1d: {
        const auto& a = std::get<ConvAttrs>(rec.attrs);
        const Matrix& w = tape.params().value(a.weight);
        const Matrix& x = in_value(0);
        Matrix& dx = in_grad(0);
        Matrix* dw = param_grads ? &(*param_grads)[a.weight] : nullptr;
        const std::size_t len = x.rows();
        const std::size_t ch = x.cols();
        const std::size_t half = a.width / 2;
        for (std::size_t pos = 0; pos < len; ++pos) {
          for (std::size_t f = 0; f < w.rows(); ++f) {
            const double g = dy(pos, f);
            if (g == 0.0) continue;
            for (std::size_t t = 0; t < a.width; ++t) {
              const std::ptrdiff_t src =
                  static_cast<std::ptrdiff_t>(pos + t) - static_cast<std::ptrdiff_t>(half);
              if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
              const auto s = static_cast<std::size_t>(src);
              for (std::size_t c = 0; c < ch; ++c) {
                dx(s, c) += w(f, t * ch + c) * g;
                if (dw) (*dw)(f, t * ch + c) += x(s, c) * g;
              }
            }
          }
        }
        add_bias_grad(param_grads, a.bias, dy);
        break;
      }
      case OpKind::Add:
        in_grad(0) += dy;
        in_grad(1) += dy;
        break;
      case OpKind::AddConstant:
        in_grad(0) += dy;
        break;
      case OpKind::LayerNorm: {
        const auto& a = std::get<LayerNormAttrs>(rec.attrs);
        const Matrix& x = in_value(0);
        const Matrix& gamma = tape.params().value(a.gamma);
        Matrix& dx = in_grad(0);
        const std::size_t n = x.cols();
        std::vector<double> xhat(n), dxhat(n);
        for (std::size_t i = 0; i < x.rows(); ++i) {
          double mean_d = 0.0;
          double mean_dx = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            xhat[j] = (x(i, j) - a.mean[i]) / a.sigma[i];
            dxhat[j] = dy(i, j) * gamma(0, j);
            mean_d += dxhat[j];
            mean_dx += dxhat[j] * xhat[j];
          }
          mean_d /= static_cast<double>(n);
          mean_dx /= static_cast<double>(n);
          for (std::size_t j = 0; j < n; ++j) dx(i, j) += (dxhat[j] - mean_d - xhat[j] * mean_dx) / a.sigma[i];
          if (param_grads) {
            Matrix& dg = (*param_grads)[a.gamma];
            Matrix& db = (*param_grads)[a.beta];
            for (std::size_t j = 0; j < n; ++j) {
              dg(0, j) += dy(i, j) * xhat[j];
              db(0, j) += dy(i, j);
            }
          }
        }
        break;
      }
      case OpKind::Scores: {
        const double scale = std::get<ScoresAttrs>(rec.attrs).scale;
        Matrix dq = matmul(dy, in_value(1));
        dq *= scale;
        Matrix dk = matmul_tn(dy, in_value(0));
        dk *= scale;
        in_grad(0) += dq;
        in_grad(1) += dk;
        break;
      }
      case OpKind::MatMul:
        in_grad(0) += matmul_nt(dy, in_value(1));
        in_grad(1) += matmul_tn(in_value(0), dy);
        break;
      case OpKind::Softmax: {
        const Matrix& s = rec.value;
        Matrix& dx = in_grad(0);
        for (std::size_t i = 0; i < s.rows(); ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < s.cols(); ++j) dot += dy(i, j) * s(i, j);
          for (std::size_t j = 0; j < s.cols(); ++j) dx(i, j) += s(i, j) * (dy(i, j) - dot);
        }
        break;
      }
      case OpKind::Gelu: {
        const Matrix& x = in_value(0);
        Matrix& dx = in_grad(0);
        for (std::size_t i = 0; i < x.size(); ++i) dx[i] += dy[i] * gelu_derivative(x[i]);
        break;
      }
      case OpKind::Relu: {
        const Matrix& x = in_value(0);
        Matrix& dx = in_grad(0);
        for (std::size_t i = 0; i < x.size(); ++i)
          if (x[i] > 0.0) dx[i] += dy[i];
        break;
      }
      case OpKind::Mul: {
        Matrix da = hadamard(dy, in_value(1));
        Matrix db = hadamard(dy, in_value(0));
        in_grad(0) += da;
        in_grad(1) += db;
        break;
      }
      case OpKind::MaxPool: {
        const auto& a = std::get<PoolAttrs>(rec.attrs);
        Matrix& dx = in_grad(0);
        const std::size_t cols = dy.cols();
        for (std::size_t o = 0; o < dy.rows(); ++o)
          for (std::size_t c = 0; c < cols; ++c) dx(a.winners[o * cols + c], c) += dy(o, c);
        break;
      }
      case OpKind::SliceCols: {
        const auto& a = std::get<SliceAttrs>(rec.attrs);
        Matrix& dx = in_grad(0);
        for (std::size_t i = 0; i < dy.rows(); ++i)
          for (std::size_t j = 0; j < a.count; ++j) dx(i, a.begin + j) += dy(i, j);
        break;
      }
      case OpKind::ConcatCols: {
        std::size_t off = 0;
        for (std::size_t p = 0; p < rec.inputs.size(); ++p) {
          Matrix& dx = in_grad(p);
          for (std::size_t i = 0; i < dx.rows(); ++i)
            for (std::size_t j = 0; j < dx.cols(); ++j) dx(i, j) += dy(i, off + j);
          off += dx.cols();
        }
        break;
      }
      case OpKind::SelectRow: {
        const std::size_t row = std::get<RowAttrs>(rec.attrs).row;
        Matrix& dx = in_grad(0);
        for (std::size_t j = 0; j < dy.cols(); ++j) dx(row, j) += dy(0, j);
        break;
      }
    }
  }
  return grads;
}

}  // namespace seqlrp::nn
