#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "seqlrp/error.hpp"
#include "seqlrp/nn/backward.hpp"
#include "seqlrp/nn/matrix.hpp"
#include "seqlrp/nn/params.hpp"
#include "seqlrp/nn/tape.hpp"

namespace seqlrp::nn {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on out-of-range settings.
  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;     // mean cross-entropy per epoch
  std::vector<double> test_accuracy;  // held-out accuracy after each epoch
};

class Adam {
 public:
  Adam(const ParamStore& params, const TrainConfig& cfg);
  void step(ParamStore& params, const std::vector<Matrix>& grads);

 private:
  TrainConfig cfg_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::size_t t_ = 0;
};

/// Two-class cross-entropy on a 1 x 2 logit row.
double cross_entropy(const Matrix& logits, int label);
Matrix cross_entropy_grad(const Matrix& logits, int label);
/// Softmax probability of `cls` for a 1 x 2 logit row.
double class_probability(const Matrix& logits, int cls);

/// A model that records its forward pass on a tape and ends in 1 x 2 logits.
template <typename M>
concept TapeClassifier = requires(const M& m, M& mm, const typename M::Input& x, Tape& t) {
  { m.params() } -> std::convertible_to<const ParamStore&>;
  { mm.mutable_params() } -> std::same_as<ParamStore&>;
  { m.forward(x, t) } -> std::same_as<NodeId>;
};

template <TapeClassifier M>
Matrix logits_of(const M& model, const typename M::Input& x) {
  Tape tape(model.params());
  const NodeId out = model.forward(x, tape);
  return tape.value(out);
}

template <TapeClassifier M>
double loss_and_grad(const M& model, const typename M::Input& x, int label, std::vector<Matrix>& grads) {
  Tape tape(model.params());
  const NodeId out = model.forward(x, tape);
  const Matrix& logits = tape.value(out);
  backward(tape, out, cross_entropy_grad(logits, label), &grads);
  return cross_entropy(logits, label);
}

template <TapeClassifier M>
double accuracy(const M& model, std::span<const typename M::Input> xs, std::span<const int> ys) {
  if (xs.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Matrix lg = logits_of(model, xs[i]);
    const int pred = lg(0, 1) > lg(0, 0) ? 1 : 0;
    if (pred == ys[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(xs.size());
}

/// Mini-batch Adam on mean cross-entropy. Bitwise deterministic for a fixed
/// seed: samples are visited in a seeded order and gradients are summed in
/// that order.
template <TapeClassifier M>
TrainHistory train_classifier(M& model, std::span<const typename M::Input> train_x, std::span<const int> train_y,
                              std::span<const typename M::Input> test_x, std::span<const int> test_y,
                              const TrainConfig& cfg,
                              const std::function<void(std::size_t, double, double)>& on_epoch = {}) {
  cfg.validate();
  if (train_x.empty()) throw DataError("train_classifier: empty training set");
  if (train_x.size() != train_y.size() || test_x.size() != test_y.size())
    throw DataError("train_classifier: inputs and labels differ in length");

  std::mt19937_64 rng(cfg.seed);
  Adam adam(model.params(), cfg);
  std::vector<std::size_t> order(train_x.size());
  std::iota(order.begin(), order.end(), 0);
  TrainHistory history;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<Matrix> grads = model.params().zeros_like();
      for (std::size_t i = start; i < stop; ++i) {
        const std::size_t idx = order[i];
        epoch_loss += loss_and_grad(model, train_x[idx], train_y[idx], grads);
      }
      if (!std::isfinite(epoch_loss)) throw NumericalError("train_classifier: loss diverged (non-finite)");
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (auto& g : grads) g *= inv;
      adam.step(model.mutable_params(), grads);
    }
    epoch_loss /= static_cast<double>(order.size());
    history.train_loss.push_back(epoch_loss);
    history.test_accuracy.push_back(accuracy(model, test_x, test_y));
    if (on_epoch) on_epoch(epoch, epoch_loss, history.test_accuracy.back());
  }
  return history;
}

/// Central finite differences (step `h`) against the analytic gradient of
/// cross-entropy, over every scalar parameter. Returns the largest relative
/// error |a - n| / max(|a|, |n|, floor).
template <TapeClassifier M>
double gradcheck(M& model, const typename M::Input& x, int label, double h = 1e-5, double floor = 1e-6) {
  std::vector<Matrix> analytic = model.params().zeros_like();
  loss_and_grad(model, x, label, analytic);
  ParamStore& ps = model.mutable_params();
  double worst = 0.0;
  for (ParamId p = 0; p < ps.size(); ++p) {
    Matrix& w = ps.value(p);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + h;
      const double up = cross_entropy(logits_of(model, x), label);
      w[i] = saved - h;
      const double down = cross_entropy(logits_of(model, x), label);
      w[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[p][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace seqlrp::nn
