#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqlrp/nn/params.hpp"
#include "seqlrp/nn/tape.hpp"

namespace seqlrp::models {

struct GlmConfig {
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t dim = 32;
  std::size_t ffn_dim = 64;
  std::size_t vocab_size = 0;
  std::size_t max_length = 512;
  double ln_eps = 1e-5;
  int cls_id = 2;
  int sep_id = 3;
  int pad_id = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static GlmConfig from_json(const nlohmann::json& j);
  friend bool operator==(const GlmConfig&, const GlmConfig&) = default;
};

/// Nodes of interest on a ToyGLM tape.
struct GlmNodes {
  nn::NodeId embedding;
  nn::NodeId logits;
};

/// BERT-style encoder: token embedding, pre-norm blocks of ALiBi attention
/// and a GEGLU feed-forward, final layer norm, linear head on [CLS].
class ToyGlm {
 public:
  using Input = std::vector<int>;

  ToyGlm(GlmConfig config, nn::ParamStore params);
  /// Random init; the head starts at zero so the initial prediction is 50/50.
  static ToyGlm init(const GlmConfig& config, std::uint64_t seed);
  /// Same architecture with every parameter set to zero.
  static ToyGlm zeros(const GlmConfig& config);

  const GlmConfig& config() const noexcept { return config_; }
  const nn::ParamStore& params() const noexcept { return params_; }
  nn::ParamStore& mutable_params() noexcept { return params_; }

  /// `ids` must start with [CLS] and end with [SEP], optionally followed by
  /// [PAD] ids whose keys are masked out of every attention row.
  GlmNodes forward_nodes(const Input& ids, nn::Tape& tape) const;
  nn::NodeId forward(const Input& ids, nn::Tape& tape) const { return forward_nodes(ids, tape).logits; }

 private:
  struct Block {
    nn::ParamId ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
    nn::ParamId ln2_g, ln2_b, w_gate, b_gate, w_content, b_content, w_down, b_down;
  };
  void bind();

  GlmConfig config_;
  nn::ParamStore params_;
  nn::ParamId embed_ = 0;
  std::vector<Block> blocks_;
  nn::ParamId lnf_g_ = 0, lnf_b_ = 0, head_w_ = 0, head_b_ = 0;
};

}  // namespace seqlrp::models
