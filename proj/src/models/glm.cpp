#include "seqlrp/models/glm.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "seqlrp/error.hpp"
#include "seqlrp/nn/ops.hpp"

namespace seqlrp::models {

void GlmConfig::validate() const {
  if (layers == 0 || heads == 0 || dim == 0 || ffn_dim == 0) throw std::invalid_argument("GlmConfig: zero size");
  if (dim % heads != 0) throw std::invalid_argument("GlmConfig: dim must be divisible by heads");
  if (vocab_size == 0) throw std::invalid_argument("GlmConfig: vocab_size must be set");
  auto in_vocab = [&](int id) { return id >= 0 && static_cast<std::size_t>(id) < vocab_size; };
  if (!in_vocab(cls_id) || !in_vocab(sep_id) || !in_vocab(pad_id))
    throw std::invalid_argument("GlmConfig: special ids outside the vocabulary");
}

nlohmann::json GlmConfig::to_json() const {
  return {{"layers", layers},   {"heads", heads},       {"dim", dim},         {"ffn_dim", ffn_dim},
          {"vocab_size", vocab_size}, {"max_length", max_length}, {"ln_eps", ln_eps}, {"cls_id", cls_id},
          {"sep_id", sep_id}, {"pad_id", pad_id}};
}

GlmConfig GlmConfig::from_json(const nlohmann::json& j) {
  GlmConfig c;
  c.layers = j.at("layers");
  c.heads = j.at("heads");
  c.dim = j.at("dim");
  c.ffn_dim = j.at("ffn_dim");
  c.vocab_size = j.at("vocab_size");
  c.max_length = j.at("max_length");
  c.ln_eps = j.at("ln_eps");
  c.cls_id = j.at("cls_id");
  c.sep_id = j.at("sep_id");
  c.pad_id = j.at("pad_id");
  c.validate();
  return c;
}

namespace {

nn::ParamStore make_params(const GlmConfig& c, std::mt19937_64* rng) {
  nn::ParamStore ps;
  auto gauss = [&](std::size_t r, std::size_t k, double sd) {
    nn::Matrix m(r, k);
    if (rng) {
      std::normal_distribution<double> nd(0.0, sd);
      for (double& v : m.values()) v = nd(*rng);
    }
    return m;
  };
  auto ones = [&](std::size_t k) { return nn::Matrix(1, k, rng ? 1.0 : 0.0); };
  const double sd_d = 1.0 / std::sqrt(static_cast<double>(c.dim));
  const double sd_f = 1.0 / std::sqrt(static_cast<double>(c.ffn_dim));
  ps.add("embed", gauss(c.vocab_size, c.dim, 1.0));
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string p = "l" + std::to_string(l) + ".";
    ps.add(p + "ln1.g", ones(c.dim));
    ps.add(p + "ln1.b", nn::Matrix(1, c.dim));
    for (const char* w : {"q", "k", "v", "o"}) {
      ps.add(p + "w" + w, gauss(c.dim, c.dim, sd_d));
      ps.add(p + "b" + w, nn::Matrix(1, c.dim));
    }
    ps.add(p + "ln2.g", ones(c.dim));
    ps.add(p + "ln2.b", nn::Matrix(1, c.dim));
    ps.add(p + "ffn.w_gate", gauss(c.dim, c.ffn_dim, sd_d));
    ps.add(p + "ffn.b_gate", nn::Matrix(1, c.ffn_dim));
    ps.add(p + "ffn.w_content", gauss(c.dim, c.ffn_dim, sd_d));
    ps.add(p + "ffn.b_content", nn::Matrix(1, c.ffn_dim));
    ps.add(p + "ffn.w_down", gauss(c.ffn_dim, c.dim, sd_f));
    ps.add(p + "ffn.b_down", nn::Matrix(1, c.dim));
  }
  ps.add("lnf.g", ones(c.dim));
  ps.add("lnf.b", nn::Matrix(1, c.dim));
  ps.add("head.w", nn::Matrix(c.dim, 2));
  ps.add("head.b", nn::Matrix(1, 2));
  return ps;
}

}  // namespace

ToyGlm::ToyGlm(GlmConfig config, nn::ParamStore params) : config_(config), params_(std::move(params)) {
  config_.validate();
  bind();
}

ToyGlm ToyGlm::init(const GlmConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  return ToyGlm(config, make_params(config, &rng));
}

ToyGlm ToyGlm::zeros(const GlmConfig& config) {
  config.validate();
  return ToyGlm(config, make_params(config, nullptr));
}

void ToyGlm::bind() {
  auto id = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    auto p = params_.find(name);
    if (!p) throw std::invalid_argument("ToyGlm: missing parameter " + name);
    const auto& m = params_.value(*p);
    if (m.rows() != rows || m.cols() != cols) throw ShapeError("ToyGlm: parameter " + name + " has the wrong shape");
    return *p;
  };
  const auto& c = config_;
  embed_ = id("embed", c.vocab_size, c.dim);
  blocks_.clear();
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string p = "l" + std::to_string(l) + ".";
    Block b{};
    b.ln1_g = id(p + "ln1.g", 1, c.dim);
    b.ln1_b = id(p + "ln1.b", 1, c.dim);
    b.wq = id(p + "wq", c.dim, c.dim);
    b.bq = id(p + "bq", 1, c.dim);
    b.wk = id(p + "wk", c.dim, c.dim);
    b.bk = id(p + "bk", 1, c.dim);
    b.wv = id(p + "wv", c.dim, c.dim);
    b.bv = id(p + "bv", 1, c.dim);
    b.wo = id(p + "wo", c.dim, c.dim);
    b.bo = id(p + "bo", 1, c.dim);
    b.ln2_g = id(p + "ln2.g", 1, c.dim);
    b.ln2_b = id(p + "ln2.b", 1, c.dim);
    b.w_gate = id(p + "ffn.w_gate", c.dim, c.ffn_dim);
    b.b_gate = id(p + "ffn.b_gate", 1, c.ffn_dim);
    b.w_content = id(p + "ffn.w_content", c.dim, c.ffn_dim);
    b.b_content = id(p + "ffn.b_content", 1, c.ffn_dim);
    b.w_down = id(p + "ffn.w_down", c.ffn_dim, c.dim);
    b.b_down = id(p + "ffn.b_down", 1, c.dim);
    blocks_.push_back(b);
  }
  lnf_g_ = id("lnf.g", 1, c.dim);
  lnf_b_ = id("lnf.b", 1, c.dim);
  head_w_ = id("head.w", c.dim, 2);
  head_b_ = id("head.b", 1, 2);
}

GlmNodes ToyGlm::forward_nodes(const Input& ids, nn::Tape& tape) const {
  const auto& c = config_;
  if (ids.size() < 2) throw std::invalid_argument("glm_forward: need at least [CLS] and [SEP]");
  if (ids.size() > c.max_length) throw std::invalid_argument("glm_forward: input exceeds max_length");
  for (int id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= c.vocab_size)
      throw std::invalid_argument("glm_forward: unknown token id " + std::to_string(id));
  std::size_t used = ids.size();
  while (used > 0 && ids[used - 1] == c.pad_id) --used;
  if (ids.front() != c.cls_id || used < 2 || ids[used - 1] != c.sep_id)
    throw std::invalid_argument("glm_forward: input must be [CLS] ... [SEP] [PAD]*");

  const std::size_t len = ids.size();
  const std::size_t head_dim = c.dim / c.heads;
  std::vector<nn::Matrix> bias = nn::alibi_bias(c.heads, len);
  if (used < len) {
    for (auto& b : bias)
      for (std::size_t j = 0; j < len; ++j)
        for (std::size_t k = used; k < len; ++k) b(j, k) = -std::numeric_limits<double>::infinity();
  }

  GlmNodes nodes{};
  nodes.embedding = tape.embedding(embed_, ids);
  nn::NodeId x = nodes.embedding;
  for (const Block& b : blocks_) {
    const nn::NodeId h = tape.layer_norm(x, b.ln1_g, b.ln1_b, c.ln_eps);
    const nn::NodeId q = tape.linear(h, b.wq, b.bq);
    const nn::NodeId k = tape.linear(h, b.wk, b.bk);
    const nn::NodeId v = tape.linear(h, b.wv, b.bv);
    std::vector<nn::NodeId> heads;
    for (std::size_t hd = 0; hd < c.heads; ++hd) {
      const nn::NodeId qh = tape.slice_cols(q, hd * head_dim, head_dim);
      const nn::NodeId kh = tape.slice_cols(k, hd * head_dim, head_dim);
      const nn::NodeId vh = tape.slice_cols(v, hd * head_dim, head_dim);
      heads.push_back(nn::attention_forward(tape, qh, kh, vh, bias[hd]).output);
    }
    const nn::NodeId merged = c.heads == 1 ? heads.front() : tape.concat_cols(heads);
    x = tape.add(x, tape.linear(merged, b.wo, b.bo));

    const nn::NodeId h2 = tape.layer_norm(x, b.ln2_g, b.ln2_b, c.ln_eps);
    const auto glu = nn::glu_forward(tape, h2, b.w_gate, b.w_content, b.b_gate, b.b_content);
    x = tape.add(x, tape.linear(glu.output, b.w_down, b.b_down));
  }
  const nn::NodeId hf = tape.layer_norm(x, lnf_g_, lnf_b_, c.ln_eps);
  const nn::NodeId cls = tape.select_row(hf, 0);
  nodes.logits = tape.linear(cls, head_w_, head_b_);
  return nodes;
}

}  // namespace seqlrp::models
