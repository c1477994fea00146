#include "seqlrp/lrp/rules.hpp"

#include <cmath>

#include "seqlrp/error.hpp"

namespace seqlrp::lrp {

namespace {

void same_shape(const Matrix& a, const Matrix& b, const char* rule) {
  if (!a.same_shape(b)) throw ShapeError(std::string(rule) + ": shape mismatch");
}

double sign_eps(double z, double eps) { return z >= 0.0 ? eps : -eps; }

}  // namespace

double stabilize(double z, double eps) { return z + sign_eps(z, eps); }

RuleResult rule_eps_linear(const Matrix& x, const Matrix& w, const Matrix& z, const Matrix& r_out, double eps) {
  same_shape(z, r_out, "rule_eps_linear");
  if (x.cols() != w.rows() || z.cols() != w.cols() || z.rows() != x.rows())
    throw ShapeError("rule_eps_linear: shape mismatch");
  const Matrix xw = nn::matmul(x, w);
  Matrix g(z.rows(), z.cols());
  double absorbed = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = stabilize(z[i], eps);
    g[i] = r_out[i] / d;
    absorbed += r_out[i] * ((z[i] - xw[i]) + sign_eps(z[i], eps)) / d;
  }
  Matrix r = nn::matmul_nt(g, w);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] *= x[i];
  return {std::move(r), absorbed};
}

RuleResult rule_eps_conv(const Matrix& x, const Matrix& w, std::size_t width, const Matrix& z, const Matrix& r_out,
                         double eps) {
  same_shape(z, r_out, "rule_eps_conv");
  const std::size_t len = x.rows();
  const std::size_t ch = x.cols();
  if (w.cols() != width * ch || z.rows() != len || z.cols() != w.rows())
    throw ShapeError("rule_eps_conv: shape mismatch");
  const std::size_t half = width / 2;
  Matrix r(len, ch);
  double absorbed = 0.0;
  for (std::size_t pos = 0; pos < len; ++pos) {
    for (std::size_t f = 0; f < w.rows(); ++f) {
      if (r_out(pos, f) == 0.0) continue;
      const double d = stabilize(z(pos, f), eps);
      const double g = r_out(pos, f) / d;
      double contrib = 0.0;
      for (std::size_t t = 0; t < width; ++t) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(pos + t) - static_cast<std::ptrdiff_t>(half);
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
        const auto s = static_cast<std::size_t>(src);
        for (std::size_t c = 0; c < ch; ++c) {
          const double term = x(s, c) * w(f, t * ch + c);
          r(s, c) += term * g;
          contrib += term;
        }
      }
      absorbed += r_out(pos, f) * ((z(pos, f) - contrib) + sign_eps(z(pos, f), eps)) / d;
    }
  }
  return {std::move(r), absorbed};
}

PairResult rule_uniform_product(const Matrix& a, const Matrix& b, const Matrix& r_out) {
  same_shape(a, b, "rule_uniform_product");
  same_shape(a, r_out, "rule_uniform_product");
  Matrix half = r_out;
  half *= 0.5;
  return {half, half, 0.0};
}

PairResult rule_bilinear_matmul(const Matrix& a, const Matrix& v, const Matrix& z, const Matrix& r_out,
                                double eps) {
  same_shape(z, r_out, "rule_bilinear_matmul");
  if (a.cols() != v.rows() || z.rows() != a.rows() || z.cols() != v.cols())
    throw ShapeError("rule_bilinear_matmul: shape mismatch");
  Matrix g(z.rows(), z.cols());
  double absorbed = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = stabilize(z[i], eps);
    g[i] = r_out[i] / d;
    absorbed += r_out[i] * sign_eps(z[i], eps) / d;
  }
  Matrix ra = nn::matmul_nt(g, v);  // sum_j V[k,j] G[i,j]
  for (std::size_t i = 0; i < ra.size(); ++i) ra[i] *= 0.5 * a[i];
  Matrix rv = nn::matmul_tn(a, g);  // sum_i A[i,k] G[i,j]
  for (std::size_t i = 0; i < rv.size(); ++i) rv[i] *= 0.5 * v[i];
  return {std::move(ra), std::move(rv), absorbed};
}

PairResult rule_scores(const Matrix& q, const Matrix& k, double scale, const Matrix& s, const Matrix& r_out,
                       double eps) {
  same_shape(s, r_out, "rule_scores");
  if (q.cols() != k.cols() || s.rows() != q.rows() || s.cols() != k.rows())
    throw ShapeError("rule_scores: shape mismatch");
  Matrix g(s.rows(), s.cols());
  double absorbed = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double d = stabilize(s[i], eps);
    g[i] = r_out[i] / d;
    absorbed += r_out[i] * sign_eps(s[i], eps) / d;
  }
  Matrix rq = nn::matmul(g, k);  // sum_j K[j,c] G[i,j]
  for (std::size_t i = 0; i < rq.size(); ++i) rq[i] *= 0.5 * scale * q[i];
  Matrix rk = nn::matmul_tn(g, q);  // sum_i Q[i,c] G[i,j]
  for (std::size_t i = 0; i < rk.size(); ++i) rk[i] *= 0.5 * scale * k[i];
  return {std::move(rq), std::move(rk), absorbed};
}

PairResult rule_sum(const Matrix& a, const Matrix& b, const Matrix& r_out, double eps) {
  same_shape(a, b, "rule_sum");
  same_shape(a, r_out, "rule_sum");
  Matrix ra(a.rows(), a.cols());
  Matrix rb(a.rows(), a.cols());
  double absorbed = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double z = a[i] + b[i];
    const double d = stabilize(z, eps);
    ra[i] = a[i] * r_out[i] / d;
    rb[i] = b[i] * r_out[i] / d;
    absorbed += r_out[i] * sign_eps(z, eps) / d;
  }
  return {std::move(ra), std::move(rb), absorbed};
}

RuleResult rule_add_constant(const Matrix& a, const Matrix& c, const Matrix& r_out, double eps) {
  same_shape(a, c, "rule_add_constant");
  same_shape(a, r_out, "rule_add_constant");
  Matrix ra(a.rows(), a.cols());
  double absorbed = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isinf(c[i])) {
      absorbed += r_out[i];
      continue;
    }
    const double z = a[i] + c[i];
    const double d = stabilize(z, eps);
    ra[i] = a[i] * r_out[i] / d;
    absorbed += r_out[i] * (c[i] + sign_eps(z, eps)) / d;
  }
  return {std::move(ra), absorbed};
}

RuleResult rule_softmax(const Matrix& x, const Matrix& s, const Matrix& r_out) {
  same_shape(x, s, "rule_softmax");
  same_shape(x, r_out, "rule_softmax");
  Matrix r(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double total = 0.0;
    for (double v : r_out.row(i)) total += v;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (std::isinf(x(i, j))) continue;
      r(i, j) = x(i, j) * (r_out(i, j) - s(i, j) * total);
    }
  }
  return {r, r_out.sum() - r.sum()};
}

RuleResult rule_layernorm(const Matrix& x, std::span<const double> mean, std::span<const double> sigma,
                          const Matrix& gamma, const Matrix& beta, const Matrix& r_out, double eps) {
  same_shape(x, r_out, "rule_layernorm");
  if (mean.size() != x.rows() || sigma.size() != x.rows() || gamma.cols() != x.cols() || !gamma.same_shape(beta))
    throw ShapeError("rule_layernorm: shape mismatch");
  const std::size_t n = x.cols();
  Matrix r(x.rows(), n);
  std::vector<double> g(n);
  double absorbed = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (sigma[i] == 0.0) throw NumericalError("rule_layernorm: zero standard deviation");
    double mean_g = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double y = gamma(0, j) * (x(i, j) - mean[i]) / sigma[i] + beta(0, j);
      const double d = stabilize(y, eps);
      g[j] = gamma(0, j) * r_out(i, j) / d;
      mean_g += g[j];
      absorbed += r_out(i, j) * (beta(0, j) + sign_eps(y, eps)) / d;
    }
    mean_g /= static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) r(i, k) = x(i, k) * (g[k] - mean_g) / sigma[i];
  }
  return {std::move(r), absorbed};
}

RuleResult rule_maxpool(const Matrix& x, std::span<const std::size_t> winners, const Matrix& r_out) {
  if (winners.size() != r_out.size() || r_out.cols() != x.cols()) throw ShapeError("rule_maxpool: shape mismatch");
  Matrix r(x.rows(), x.cols());
  const std::size_t cols = r_out.cols();
  for (std::size_t o = 0; o < r_out.rows(); ++o)
    for (std::size_t c = 0; c < cols; ++c) r(winners[o * cols + c], c) += r_out(o, c);
  return {std::move(r), 0.0};
}

}  // namespace seqlrp::lrp
