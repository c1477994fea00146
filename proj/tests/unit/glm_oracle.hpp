#pragma once

// Independent re-implementation of a one-layer, one-head ToyGLM forward pass
// and its relevance backward pass, written with plain nested vectors and
// loops. Shares no code with the library beyond reading parameter values.

#include <cmath>
#include <string>
#include <vector>

#include "seqlrp/nn/params.hpp"

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline Mat param(const seqlrp::nn::ParamStore& ps, const std::string& name) {
  const auto& m = ps.value(*ps.find(name));
  Mat out(m.rows(), Vec(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, Vec(c, 0.0)); }

inline double stab(double z, double eps) { return z >= 0 ? z + eps : z - eps; }

inline Mat affine(const Mat& x, const Mat& w, const Mat& b) {
  Mat z = zeros(x.size(), w[0].size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < w[0].size(); ++j) {
      double s = b[0][j];
      for (std::size_t k = 0; k < w.size(); ++k) s += x[i][k] * w[k][j];
      z[i][j] = s;
    }
  return z;
}

struct Norm {
  Mat y;
  Vec mean, sigma;
};

inline Norm layer_norm(const Mat& x, const Mat& g, const Mat& b, double ln_eps) {
  Norm n{zeros(x.size(), x[0].size()), {}, {}};
  const double d = static_cast<double>(x[0].size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double mu = 0;
    for (double v : x[i]) mu += v;
    mu /= d;
    double var = 0;
    for (double v : x[i]) var += (v - mu) * (v - mu);
    const double sd = std::sqrt(var / d + ln_eps);
    for (std::size_t j = 0; j < x[i].size(); ++j) n.y[i][j] = g[0][j] * (x[i][j] - mu) / sd + b[0][j];
    n.mean.push_back(mu);
    n.sigma.push_back(sd);
  }
  return n;
}

inline double gelu(double x) { return 0.5 * x * std::erfc(-x / std::sqrt(2.0)); }

// eps rule for z = x w + b
inline Mat lrp_linear(const Mat& x, const Mat& w, const Mat& z, const Mat& r, double eps) {
  Mat out = zeros(x.size(), x[0].size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t k = 0; k < w.size(); ++k) {
      double s = 0;
      for (std::size_t j = 0; j < w[0].size(); ++j) s += w[k][j] * r[i][j] / stab(z[i][j], eps);
      out[i][k] = x[i][k] * s;
    }
  return out;
}

// Detached-sigma layer norm treated as the affine map y = W x + beta with
// W[j][k] = gamma_j (delta_jk - 1/n) / sigma, then the eps rule.
inline Mat lrp_layer_norm(const Mat& x, const Norm& n, const Mat& g, const Mat& r, double eps) {
  const std::size_t d = x[0].size();
  Mat out = zeros(x.size(), d);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t k = 0; k < d; ++k) {
      double s = 0;
      for (std::size_t j = 0; j < d; ++j) {
        const double wjk = g[0][j] * ((j == k ? 1.0 : 0.0) - 1.0 / static_cast<double>(d)) / n.sigma[i];
        s += wjk * r[i][j] / stab(n.y[i][j], eps);
      }
      out[i][k] = x[i][k] * s;
    }
  return out;
}

inline void add_into(Mat& a, const Mat& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += b[i][j];
}

struct Result {
  Vec logits;
  Vec token_relevance;
};

// ids must start with [CLS]; target in {0, 1}.
inline Result run(const seqlrp::nn::ParamStore& ps, const std::vector<int>& ids, int target, double eps,
                  double ln_eps = 1e-5) {
  const Mat E = param(ps, "embed");
  const std::size_t L = ids.size();
  Mat e;
  for (int id : ids) e.push_back(E[static_cast<std::size_t>(id)]);
  const std::size_t d = e[0].size();

  // attention sub-block
  const Norm n1 = layer_norm(e, param(ps, "l0.ln1.g"), param(ps, "l0.ln1.b"), ln_eps);
  const Mat Wq = param(ps, "l0.wq"), Wk = param(ps, "l0.wk"), Wv = param(ps, "l0.wv"), Wo = param(ps, "l0.wo");
  const Mat q = affine(n1.y, Wq, param(ps, "l0.bq"));
  const Mat k = affine(n1.y, Wk, param(ps, "l0.bk"));
  const Mat v = affine(n1.y, Wv, param(ps, "l0.bv"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const double slope = std::pow(2.0, -8.0);
  Mat S = zeros(L, L), B = zeros(L, L), A = zeros(L, L);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      double s = 0;
      for (std::size_t c = 0; c < d; ++c) s += q[i][c] * k[j][c];
      S[i][j] = s * scale;
      B[i][j] = S[i][j] - slope * std::abs(static_cast<double>(i) - static_cast<double>(j));
    }
    double mx = B[i][0];
    for (double b : B[i]) mx = std::max(mx, b);
    double z = 0;
    for (std::size_t j = 0; j < L; ++j) z += std::exp(B[i][j] - mx);
    for (std::size_t j = 0; j < L; ++j) A[i][j] = std::exp(B[i][j] - mx) / z;
  }
  Mat O = zeros(L, d);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t c = 0; c < d; ++c)
      for (std::size_t j = 0; j < L; ++j) O[i][c] += A[i][j] * v[j][c];
  const Mat a = affine(O, Wo, param(ps, "l0.bo"));
  Mat x1 = e;
  add_into(x1, a);

  // feed-forward sub-block
  const Norm n2 = layer_norm(x1, param(ps, "l0.ln2.g"), param(ps, "l0.ln2.b"), ln_eps);
  const Mat Wg = param(ps, "l0.ffn.w_gate"), Wc = param(ps, "l0.ffn.w_content"), Wd = param(ps, "l0.ffn.w_down");
  const Mat gp = affine(n2.y, Wg, param(ps, "l0.ffn.b_gate"));
  const Mat ct = affine(n2.y, Wc, param(ps, "l0.ffn.b_content"));
  Mat m = gp;
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j) m[i][j] = gelu(gp[i][j]) * ct[i][j];
  const Mat dn = affine(m, Wd, param(ps, "l0.ffn.b_down"));
  Mat x2 = x1;
  add_into(x2, dn);

  const Mat gf = param(ps, "lnf.g");
  const Norm nf = layer_norm(x2, gf, param(ps, "lnf.b"), ln_eps);
  const Mat Wh = param(ps, "head.w");
  const Mat cls{nf.y[0]};
  const Mat logits = affine(cls, Wh, param(ps, "head.b"));

  // relevance, starting from the target logit
  Mat r_logits = zeros(1, 2);
  r_logits[0][static_cast<std::size_t>(target)] = logits[0][static_cast<std::size_t>(target)];
  const Mat r_cls = lrp_linear(cls, Wh, logits, r_logits, eps);
  Mat r_hf = zeros(L, d);
  r_hf[0] = r_cls[0];
  const Mat r_x2 = lrp_layer_norm(x2, nf, gf, r_hf, eps);

  Mat r_x1 = zeros(L, d), r_dn = zeros(L, d);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t c = 0; c < d; ++c) {
      const double den = stab(x2[i][c], eps);
      r_x1[i][c] = x1[i][c] / den * r_x2[i][c];
      r_dn[i][c] = dn[i][c] / den * r_x2[i][c];
    }
  const Mat r_m = lrp_linear(m, Wd, dn, r_dn, eps);
  Mat r_half = r_m;
  for (auto& row : r_half)
    for (double& val : row) val *= 0.5;
  Mat r_h2 = lrp_linear(n2.y, Wg, gp, r_half, eps);  // gate branch, GELU passes through
  add_into(r_h2, lrp_linear(n2.y, Wc, ct, r_half, eps));
  add_into(r_x1, lrp_layer_norm(x1, n2, param(ps, "l0.ln2.g"), r_h2, eps));

  Mat r_e = zeros(L, d), r_a = zeros(L, d);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t c = 0; c < d; ++c) {
      const double den = stab(x1[i][c], eps);
      r_e[i][c] = e[i][c] / den * r_x1[i][c];
      r_a[i][c] = a[i][c] / den * r_x1[i][c];
    }
  const Mat r_O = lrp_linear(O, Wo, a, r_a, eps);

  // O = A v: half to each factor, proportional to the summands
  Mat r_A = zeros(L, L), r_v = zeros(L, d);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t c = 0; c < d; ++c) {
      const double g = r_O[i][c] / stab(O[i][c], eps);
      for (std::size_t j = 0; j < L; ++j) {
        r_A[i][j] += 0.5 * A[i][j] * v[j][c] * g;
        r_v[j][c] += 0.5 * A[i][j] * v[j][c] * g;
      }
    }
  // softmax: x * (R - s * sum R)
  Mat r_B = zeros(L, L);
  for (std::size_t i = 0; i < L; ++i) {
    double tot = 0;
    for (double val : r_A[i]) tot += val;
    for (std::size_t j = 0; j < L; ++j) r_B[i][j] = B[i][j] * (r_A[i][j] - A[i][j] * tot);
  }
  // B = S + bias: the bias share is dropped
  Mat r_S = zeros(L, L);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) r_S[i][j] = S[i][j] / stab(B[i][j], eps) * r_B[i][j];
  // S = scale q k^T: half to each factor
  Mat r_q = zeros(L, d), r_k = zeros(L, d);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) {
      const double g = r_S[i][j] / stab(S[i][j], eps);
      for (std::size_t c = 0; c < d; ++c) {
        r_q[i][c] += 0.5 * scale * q[i][c] * k[j][c] * g;
        r_k[j][c] += 0.5 * scale * q[i][c] * k[j][c] * g;
      }
    }
  Mat r_h = lrp_linear(n1.y, Wq, q, r_q, eps);
  add_into(r_h, lrp_linear(n1.y, Wk, k, r_k, eps));
  add_into(r_h, lrp_linear(n1.y, Wv, v, r_v, eps));
  add_into(r_e, lrp_layer_norm(e, n1, param(ps, "l0.ln1.g"), r_h, eps));

  Result res;
  res.logits = logits[0];
  for (const auto& row : r_e) {
    double s = 0;
    for (double val : row) s += val;
    res.token_relevance.push_back(s);
  }
  return res;
}

}  // namespace oracle
