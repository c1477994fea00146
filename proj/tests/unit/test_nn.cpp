#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "seqlrp/error.hpp"
#include "seqlrp/nn/backward.hpp"
#include "seqlrp/nn/checkpoint.hpp"
#include "seqlrp/nn/ops.hpp"
#include "seqlrp/nn/tape.hpp"
#include "seqlrp/nn/train.hpp"

using namespace seqlrp;
using namespace seqlrp::nn;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(r, c);
  for (auto& v : m.values()) v = nd(rng);
  return m;
}

// Checks every parameter gradient of sum(out * g) against central differences.
double param_grad_error(ParamStore& ps, const std::function<NodeId(Tape&)>& build, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tape probe(ps);
  const NodeId out0 = build(probe);
  const Matrix g = random_matrix(probe.value(out0).rows(), probe.value(out0).cols(), rng);
  auto objective = [&]() {
    Tape t(ps);
    const Matrix& y = t.value(build(t));
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * g[i];
    return s;
  };
  std::vector<Matrix> grads = ps.zeros_like();
  {
    Tape t(ps);
    const NodeId out = build(t);
    backward(t, out, g, &grads);
  }
  double worst = 0.0;
  const double h = 1e-5;
  for (ParamId p = 0; p < ps.size(); ++p) {
    for (std::size_t i = 0; i < ps.value(p).size(); ++i) {
      const double saved = ps.value(p)[i];
      ps.value(p)[i] = saved + h;
      const double up = objective();
      ps.value(p)[i] = saved - h;
      const double down = objective();
      ps.value(p)[i] = saved;
      const double num = (up - down) / (2 * h);
      const double a = grads[p][i];
      worst = std::max(worst, std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-6}));
    }
  }
  return worst;
}

// Minimal tape classifier: logits = x W + b.
struct LinearModel {
  using Input = Matrix;
  ParamStore store;
  ParamId w = 0;
  ParamId b = 0;
  const ParamStore& params() const { return store; }
  ParamStore& mutable_params() { return store; }
  NodeId forward(const Matrix& x, Tape& t) const { return t.linear(t.input(x), w, b); }
};

LinearModel make_linear(std::size_t features, std::uint64_t seed, bool zero = false) {
  std::mt19937_64 rng(seed);
  LinearModel m;
  m.w = m.store.add("w", zero ? Matrix(features, 2) : random_matrix(features, 2, rng, 0.3));
  m.b = m.store.add("b", zero ? Matrix(1, 2) : random_matrix(1, 2, rng, 0.1));
  return m;
}

}  // namespace

TEST(Matrix, BasicOps) {
  const Matrix a{{1, 2}, {3, 4}};
  const Matrix b{{5, 6}, {7, 8}};
  EXPECT_EQ(matmul(a, b), (Matrix{{19, 22}, {43, 50}}));
  EXPECT_EQ(matmul_nt(a, b), matmul(a, transpose(b)));
  EXPECT_EQ(matmul_tn(a, b), matmul(transpose(a), b));
  EXPECT_EQ(hadamard(a, b), (Matrix{{5, 12}, {21, 32}}));
  EXPECT_THROW(matmul(a, Matrix(3, 1)), ShapeError);
  EXPECT_DOUBLE_EQ(a.sum(), 10.0);
  Matrix c = a;
  c += b;
  c *= 0.5;
  EXPECT_EQ(c, (Matrix{{3, 4}, {5, 6}}));
}

TEST(Params, NamesAreUnique) {
  ParamStore ps;
  ps.add("a", Matrix(1, 1));
  EXPECT_THROW(ps.add("a", Matrix(1, 1)), std::invalid_argument);
  EXPECT_EQ(ps.find("a"), 0u);
  EXPECT_FALSE(ps.find("b").has_value());
}

TEST(Alibi, Examples) {
  const auto one = alibi_bias(1, 3);
  ASSERT_EQ(one.size(), 1u);
  const double m = std::exp2(-8.0);
  EXPECT_DOUBLE_EQ(one[0](0, 0), 0.0);
  EXPECT_DOUBLE_EQ(one[0](0, 1), -m);
  EXPECT_DOUBLE_EQ(one[0](0, 2), -2 * m);
  const auto many = alibi_bias(4, 6);
  for (std::size_t h = 0; h < 4; ++h) {
    EXPECT_DOUBLE_EQ(alibi_slope(h + 1, 4), std::exp2(-2.0 * static_cast<double>(h + 1)));
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_EQ(many[h](j, j), 0.0);
      for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(many[h](j, k), many[h](k, j));
    }
  }
  EXPECT_THROW(alibi_bias(0, 3), std::invalid_argument);
}

TEST(Attention, Examples) {
  Tape t;
  const NodeId q = t.input(Matrix(3, 2));
  const NodeId k = t.input(Matrix(3, 2));
  const NodeId v = t.input(Matrix{{1, 0}, {0, 1}, {2, 2}});
  Matrix bias(3, 3);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t c = 0; c < 3; ++c) bias(j, c) = -0.5 * std::abs(double(j) - double(c));
  const auto n = attention_forward(t, q, k, v, bias);
  const double e0 = 1.0, e1 = std::exp(-0.5), e2 = std::exp(-1.0);
  const double z = e0 + e1 + e2;
  EXPECT_NEAR(t.value(n.weights)(0, 0), 0.5065, 1e-4);
  EXPECT_NEAR(t.value(n.weights)(0, 1), 0.3072, 1e-4);
  EXPECT_NEAR(t.value(n.weights)(0, 2), 0.1863, 1e-4);
  EXPECT_NEAR(t.value(n.weights)(0, 0), e0 / z, 1e-15);

  Tape t2;
  const auto n2 = attention_forward(t2, t2.input(Matrix(3, 2)), t2.input(Matrix(3, 2)), t2.input(Matrix(3, 2)),
                                    Matrix(3, 3));
  EXPECT_EQ(t2.value(n2.output), Matrix(3, 2));
  for (double w : t2.value(n2.weights).values()) EXPECT_DOUBLE_EQ(w, 1.0 / 3.0);

  EXPECT_THROW(attention_forward(t2, t2.input(Matrix(3, 2)), t2.input(Matrix(3, 3)), t2.input(Matrix(3, 2)),
                                 Matrix(3, 3)),
               ShapeError);
  EXPECT_THROW(attention_forward(t2, t2.input(Matrix(3, 2)), t2.input(Matrix(3, 2)), t2.input(Matrix(3, 2)),
                                 Matrix(2, 2)),
               ShapeError);
}

TEST(Attention, RowsAreConvexCombinations) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t L = 2 + rng() % 8;
    Tape t;
    const auto v = random_matrix(L, 3, rng);
    const auto n = attention_forward(t, t.input(random_matrix(L, 3, rng)), t.input(random_matrix(L, 3, rng)),
                                     t.input(v), alibi_bias(2, L)[0]);
    const Matrix& w = t.value(n.weights);
    const Matrix& o = t.value(n.output);
    for (std::size_t i = 0; i < L; ++i) {
      double s = 0.0;
      for (double x : w.row(i)) s += x;
      EXPECT_NEAR(s, 1.0, 1e-12);
      for (std::size_t c = 0; c < 3; ++c) {
        double lo = v(0, c), hi = v(0, c);
        for (std::size_t r = 0; r < L; ++r) {
          lo = std::min(lo, v(r, c));
          hi = std::max(hi, v(r, c));
        }
        EXPECT_GE(o(i, c), lo - 1e-12);
        EXPECT_LE(o(i, c), hi + 1e-12);
      }
    }
  }
}

TEST(Softmax, MaskedEntriesAreZero) {
  const double inf = std::numeric_limits<double>::infinity();
  const Matrix s = softmax_rows(Matrix{{0.0, -inf, 1.0}});
  EXPECT_EQ(s(0, 1), 0.0);
  EXPECT_NEAR(s(0, 0) + s(0, 2), 1.0, 1e-15);
}

TEST(Glu, Examples) {
  EXPECT_EQ(gelu(0.0), 0.0);
  EXPECT_NEAR(gelu(1.0) * 2.0, 1.6827, 1e-4);
  EXPECT_NEAR(gelu(1.0), 0.5 * std::erfc(-1.0 / std::sqrt(2.0)), 1e-15);

  ParamStore ps;
  const ParamId wg = ps.add("wg", Matrix{{1.0}});
  const ParamId wc = ps.add("wc", Matrix{{2.0}});
  Tape t(ps);
  const auto n = glu_forward(t, t.input(Matrix{{1.0}}), wg, wc);
  EXPECT_NEAR(t.value(n.output)(0, 0), 2.0 * gelu(1.0), 1e-15);
  const auto z = glu_forward(t, t.input(Matrix{{0.0}}), wg, wc);
  EXPECT_EQ(t.value(z.output)(0, 0), 0.0);

  ParamStore ps2;
  const ParamId wg2 = ps2.add("wg", Matrix{{1.0}});
  const ParamId wc0 = ps2.add("wc", Matrix{{0.0}});
  Tape t2(ps2);
  EXPECT_EQ(t2.value(glu_forward(t2, t2.input(Matrix{{3.0}}), wg2, wc0).output)(0, 0), 0.0);
}

TEST(Conv1d, Examples) {
  ParamStore ps;
  // width 3, 4 channels: column = tap * 4 + channel; "A" detector at the center tap
  Matrix w(1, 12);
  w(0, 1 * 4 + 0) = 1.0;
  const ParamId wid = ps.add("w", w);
  const ParamId zid = ps.add("zero", Matrix(1, 12));
  Tape t(ps);
  const Matrix cac{{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 1, 0, 0}};
  EXPECT_EQ(t.value(conv1d_forward(t, t.input(cac), wid, std::nullopt, 3)), (Matrix{{0}, {1}, {0}}));
  EXPECT_EQ(t.value(conv1d_forward(t, t.input(cac), zid, std::nullopt, 3)), Matrix(3, 1));
  EXPECT_THROW(conv1d_forward(t, t.input(Matrix(2, 4)), wid, std::nullopt, 3), ShapeError);

  ParamStore ps2;
  const ParamId even = ps2.add("w", Matrix(1, 8));
  Tape t2(ps2);
  EXPECT_THROW(conv1d_forward(t2, t2.input(Matrix(5, 4)), even, std::nullopt, 2), ShapeError);
}

TEST(Conv1d, TranslationEquivariance) {
  std::mt19937_64 rng(8);
  ParamStore ps;
  const ParamId w = ps.add("w", random_matrix(3, 20, rng));
  const Matrix x = random_matrix(12, 4, rng);
  Matrix shifted(12, 4);
  for (std::size_t r = 1; r < 12; ++r)
    for (std::size_t c = 0; c < 4; ++c) shifted(r, c) = x(r - 1, c);
  Tape t(ps);
  const Matrix& a = t.value(conv1d_forward(t, t.input(x), w, std::nullopt, 5));
  const Matrix& b = t.value(conv1d_forward(t, t.input(shifted), w, std::nullopt, 5));
  for (std::size_t r = 3; r + 3 < 12; ++r)
    for (std::size_t f = 0; f < 3; ++f) EXPECT_NEAR(b(r, f), a(r - 1, f), 1e-12);
}

TEST(MaxPool, PartialWindowAndTies) {
  Tape t;
  const NodeId x = t.input(Matrix{{1}, {5}, {2}, {3}, {3}});
  const NodeId p = t.max_pool(x, 3);
  EXPECT_EQ(t.value(p), (Matrix{{5}, {3}}));
  const auto& attrs = std::get<PoolAttrs>(t.record(p).attrs);
  EXPECT_EQ(attrs.winners, (std::vector<std::size_t>{1, 3}));
}

TEST(Gradients, EveryPrimitiveMatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  ParamStore ps;
  const ParamId emb = ps.add("emb", random_matrix(5, 4, rng));
  const ParamId w1 = ps.add("w1", random_matrix(4, 4, rng, 0.5));
  const ParamId b1 = ps.add("b1", random_matrix(1, 4, rng, 0.1));
  const ParamId w2 = ps.add("w2", random_matrix(4, 4, rng, 0.5));
  const ParamId g = ps.add("g", random_matrix(1, 4, rng, 0.3));
  const ParamId be = ps.add("be", random_matrix(1, 4, rng, 0.1));
  const ParamId wg = ps.add("wg", random_matrix(4, 6, rng, 0.5));
  const ParamId wc = ps.add("wc", random_matrix(4, 6, rng, 0.5));
  const ParamId wd = ps.add("wd", random_matrix(6, 4, rng, 0.5));
  const std::vector<int> ids{0, 3, 1, 4, 2};
  const Matrix bias = alibi_bias(1, 5)[0];

  const double err = param_grad_error(
      ps,
      [&](Tape& t) {
        const NodeId e = t.embedding(emb, ids);
        const NodeId ln = t.layer_norm(e, g, be, 1e-5);
        const NodeId q = t.linear(ln, w1, b1);
        const NodeId k = t.linear(ln, w2);
        const auto att = attention_forward(t, t.slice_cols(q, 0, 2), t.slice_cols(k, 0, 2), t.slice_cols(k, 2, 2), bias);
        const auto att2 = attention_forward(t, t.slice_cols(q, 2, 2), t.slice_cols(k, 2, 2), t.slice_cols(q, 0, 2), bias);
        const std::vector<NodeId> parts{att.output, att2.output};
        const NodeId mixed = t.add(e, t.concat_cols(parts));
        const auto ffn = glu_forward(t, mixed, wg, wc);
        const NodeId down = t.linear(ffn.output, wd);
        const NodeId r = t.relu(t.add(mixed, down));
        return t.select_row(t.add_constant(r, Matrix(5, 4, 0.25)), 0);
      },
      5);
  EXPECT_LT(err, 1e-4);

  ParamStore cs;
  const ParamId cw = cs.add("cw", random_matrix(3, 12, rng, 0.5));
  const ParamId cb = cs.add("cb", random_matrix(1, 3, rng, 0.1));
  const Matrix x = random_matrix(9, 4, rng);
  const double conv_err = param_grad_error(
      cs, [&](Tape& t) { return t.max_pool(t.relu(t.conv1d(t.input(x), cw, cb, 3)), 4); }, 9);
  EXPECT_LT(conv_err, 1e-4);
}

TEST(Tape, ReplayReproducesEveryRecord) {
  std::mt19937_64 rng(21);
  ParamStore ps;
  const ParamId emb = ps.add("emb", random_matrix(4, 4, rng));
  const ParamId w = ps.add("w", random_matrix(4, 4, rng));
  const ParamId g = ps.add("g", random_matrix(1, 4, rng));
  const ParamId b = ps.add("b", random_matrix(1, 4, rng));
  const ParamId cw = ps.add("cw", random_matrix(2, 12, rng));
  Tape t(ps);
  const std::vector<int> ids{1, 2, 3};
  const NodeId e = t.embedding(emb, ids);
  const NodeId ln = t.layer_norm(e, g, b, 1e-5);
  const NodeId q = t.linear(ln, w);
  const auto att = attention_forward(t, q, q, ln, alibi_bias(1, 3)[0]);
  const NodeId c = t.conv1d(att.output, cw, std::nullopt, 3);
  t.select_row(t.max_pool(t.relu(c), 2), 0);
  t.mul(t.gelu(q), ln);
  for (NodeId id = 0; id < t.size(); ++id) EXPECT_EQ(recompute(t, id), t.value(id)) << to_string(t.record(id).kind);
  for (NodeId id = 0; id < t.size(); ++id)
    for (NodeId in : t.record(id).inputs) EXPECT_LT(in, id);
}

TEST(Gradcheck, LinearModelIsExact) {
  auto m = make_linear(5, 2);
  std::mt19937_64 rng(1);
  EXPECT_LT(gradcheck(m, random_matrix(1, 5, rng), 1), 1e-8);
}

TEST(Train, InitialLossIsLn2) {
  auto m = make_linear(3, 0, true);
  std::mt19937_64 rng(4);
  std::vector<Matrix> xs;
  std::vector<int> ys;
  for (int i = 0; i < 10; ++i) {
    xs.push_back(random_matrix(1, 3, rng));
    ys.push_back(i % 2);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) total += cross_entropy(logits_of(m, xs[i]), ys[i]);
  EXPECT_NEAR(total / 10.0, std::log(2.0), 1e-15);
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto h = train_classifier(m, std::span<const Matrix>(xs), std::span<const int>(ys),
                                  std::span<const Matrix>(xs), std::span<const int>(ys), cfg);
  EXPECT_TRUE(h.train_loss.empty());
}

namespace {

struct Toy {
  std::vector<Matrix> xtr, xte;
  std::vector<int> ytr, yte;
};

Toy separable_data(std::uint64_t seed, bool shuffle_labels) {
  std::mt19937_64 rng(seed);
  Toy d;
  for (int i = 0; i < 600; ++i) {
    Matrix x = random_matrix(1, 4, rng);
    int y = x(0, 0) + 0.5 * x(0, 1) > 0 ? 1 : 0;
    if (shuffle_labels) y = static_cast<int>(rng() % 2);
    (i < 400 ? d.xtr : d.xte).push_back(x);
    (i < 400 ? d.ytr : d.yte).push_back(y);
  }
  return d;
}

}  // namespace

TEST(Train, LearnsSeparableDataAndIsBitwiseReproducible) {
  const auto d = separable_data(1, false);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.learning_rate = 0.05;
  cfg.seed = 9;
  auto a = make_linear(4, 3);
  auto b = make_linear(4, 3);
  const auto ha = train_classifier(a, std::span<const Matrix>(d.xtr), std::span<const int>(d.ytr),
                                   std::span<const Matrix>(d.xte), std::span<const int>(d.yte), cfg);
  const auto hb = train_classifier(b, std::span<const Matrix>(d.xtr), std::span<const int>(d.ytr),
                                   std::span<const Matrix>(d.xte), std::span<const int>(d.yte), cfg);
  EXPECT_GT(ha.test_accuracy.back(), 0.95);
  EXPECT_EQ(ha.train_loss, hb.train_loss);
  EXPECT_EQ(a.store, b.store);
  EXPECT_LT(ha.train_loss.back(), ha.train_loss.front());
}

TEST(Train, RandomLabelsStayAtChance) {
  const auto d = separable_data(2, true);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.learning_rate = 0.05;
  auto m = make_linear(4, 3);
  const auto h = train_classifier(m, std::span<const Matrix>(d.xtr), std::span<const int>(d.ytr),
                                  std::span<const Matrix>(d.xte), std::span<const int>(d.yte), cfg);
  EXPECT_NEAR(h.test_accuracy.back(), 0.5, 0.08);
}

TEST(Train, NanLossAborts) {
  auto m = make_linear(2, 1);
  m.store.value(m.w)(0, 0) = std::numeric_limits<double>::quiet_NaN();
  std::vector<Matrix> xs{Matrix{{1.0, 1.0}}};
  std::vector<int> ys{1};
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train_classifier(m, std::span<const Matrix>(xs), std::span<const int>(ys),
                                std::span<const Matrix>(xs), std::span<const int>(ys), cfg),
               NumericalError);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.beta1 = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.beta2 = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Checkpoint, RoundTripAndLayout) {
  std::mt19937_64 rng(6);
  ParamStore ps;
  ps.add("alpha", random_matrix(2, 3, rng));
  ps.add("b", Matrix{{-0.0, 1e-300}});
  const nlohmann::json header{{"model", "test"}};
  const std::string bytes = encode_checkpoint(header, ps);
  EXPECT_EQ(bytes.substr(0, 8), "SEQLRPCK");
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 1u);  // version, little-endian
  const auto ck = decode_checkpoint(bytes);
  EXPECT_EQ(ck.header, header);
  EXPECT_EQ(ck.params.size(), 2u);
  EXPECT_EQ(ck.params.name(0), "alpha");
  for (ParamId p = 0; p < 2; ++p)
    for (std::size_t i = 0; i < ps.value(p).size(); ++i)
      EXPECT_EQ(std::bit_cast<std::uint64_t>(ck.params.value(p)[i]), std::bit_cast<std::uint64_t>(ps.value(p)[i]));
  EXPECT_EQ(encode_checkpoint(ck.header, ck.params), bytes);

  // Size: magic + version + header + count + per-parameter records.
  const std::string hdr = header.dump();
  const std::size_t expected = 8 + 4 + 4 + hdr.size() + 4 + (4 + 5 + 8 + 6 * 8) + (4 + 1 + 8 + 2 * 8);
  EXPECT_EQ(bytes.size(), expected);

  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 1)), std::exception);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), std::exception);
}
