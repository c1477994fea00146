#include "seqlrp/nn/train.hpp"

#include <stdexcept>

namespace seqlrp::nn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw std::invalid_argument("TrainConfig: Adam betas must lie in (0, 1)");
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch size must be >= 1");
}

Adam::Adam(const ParamStore& params, const TrainConfig& cfg)
    : cfg_(cfg), m_(params.zeros_like()), v_(params.zeros_like()) {}

void Adam::step(ParamStore& params, const std::vector<Matrix>& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (ParamId p = 0; p < params.size(); ++p) {
    Matrix& w = params.value(p);
    const Matrix& g = grads[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m_[p][i] = cfg_.beta1 * m_[p][i] + (1.0 - cfg_.beta1) * g[i];
      v_[p][i] = cfg_.beta2 * v_[p][i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m_[p][i] / c1;
      const double vhat = v_[p][i] / c2;
      w[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
    }
  }
}

namespace {

void check_logits(const Matrix& logits) {
  if (logits.rows() != 1 || logits.cols() != 2) throw ShapeError("expected 1 x 2 logits");
}

}  // namespace

double class_probability(const Matrix& logits, int cls) {
  check_logits(logits);
  const double other = logits(0, 1 - cls);
  const double mine = logits(0, cls);
  return 1.0 / (1.0 + std::exp(other - mine));
}

double cross_entropy(const Matrix& logits, int label) {
  check_logits(logits);
  const double a = logits(0, label);
  const double b = logits(0, 1 - label);
  // log(1 + e^(b - a)) evaluated stably
  const double d = b - a;
  return d > 0.0 ? d + std::log1p(std::exp(-d)) : std::log1p(std::exp(d));
}

Matrix cross_entropy_grad(const Matrix& logits, int label) {
  check_logits(logits);
  Matrix g(1, 2);
  for (int c = 0; c < 2; ++c) g(0, c) = class_probability(logits, c) - (c == label ? 1.0 : 0.0);
  return g;
}

}  // namespace seqlrp::nn
