#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqlrp/nn/matrix.hpp"
#include "seqlrp/nn/params.hpp"
#include "seqlrp/nn/tape.hpp"

namespace seqlrp::models {

struct ConvLayerSpec {
  std::size_t filters = 16;
  std::size_t width = 7;
  friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

struct CnnConfig {
  std::vector<ConvLayerSpec> conv{{16, 7}, {16, 7}};
  /// One max-pool width per conv layer.
  std::vector<std::size_t> pool{4, 4};
  /// Hidden dense widths between the global max pool and the 2-logit head.
  std::vector<std::size_t> dense{16};

  void validate() const;
  nlohmann::json to_json() const;
  static CnnConfig from_json(const nlohmann::json& j);
  friend bool operator==(const CnnConfig&, const CnnConfig&) = default;
};

struct CnnNodes {
  nn::NodeId input;
  nn::NodeId logits;
};

/// conv -> ReLU -> max-pool stack over a one-hot l x 4 input, global max
/// pool, optional ReLU dense layers, linear 2-logit head.
class ToyCnn {
 public:
  using Input = nn::Matrix;

  ToyCnn(CnnConfig config, nn::ParamStore params);
  static ToyCnn init(const CnnConfig& config, std::uint64_t seed);
  static ToyCnn zeros(const CnnConfig& config);

  const CnnConfig& config() const noexcept { return config_; }
  const nn::ParamStore& params() const noexcept { return params_; }
  nn::ParamStore& mutable_params() noexcept { return params_; }

  CnnNodes forward_nodes(const nn::Matrix& one_hot, nn::Tape& tape) const;
  nn::NodeId forward(const nn::Matrix& one_hot, nn::Tape& tape) const { return forward_nodes(one_hot, tape).logits; }

 private:
  struct Layer {
    nn::ParamId w, b;
  };
  void bind();

  CnnConfig config_;
  nn::ParamStore params_;
  std::vector<Layer> conv_;
  std::vector<Layer> dense_;
  Layer head_{};
};

}  // namespace seqlrp::models
