#include "seqlrp/models/cnn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "seqlrp/error.hpp"
#include "seqlrp/nn/ops.hpp"

namespace seqlrp::models {

void CnnConfig::validate() const {
  if (conv.empty()) throw std::invalid_argument("CnnConfig: at least one conv layer required");
  if (pool.size() != conv.size()) throw std::invalid_argument("CnnConfig: need one pool width per conv layer");
  for (const auto& c : conv) {
    if (c.filters == 0) throw std::invalid_argument("CnnConfig: zero filters");
    if (c.width % 2 == 0) throw std::invalid_argument("CnnConfig: conv widths must be odd");
  }
  for (std::size_t p : pool)
    if (p == 0) throw std::invalid_argument("CnnConfig: zero pool width");
  for (std::size_t d : dense)
    if (d == 0) throw std::invalid_argument("CnnConfig: zero dense width");
}

nlohmann::json CnnConfig::to_json() const {
  nlohmann::json convs = nlohmann::json::array();
  for (const auto& c : conv) convs.push_back({{"filters", c.filters}, {"width", c.width}});
  return {{"conv", convs}, {"pool", pool}, {"dense", dense}};
}

CnnConfig CnnConfig::from_json(const nlohmann::json& j) {
  CnnConfig c;
  c.conv.clear();
  for (const auto& e : j.at("conv")) c.conv.push_back({e.at("filters"), e.at("width")});
  c.pool = j.at("pool").get<std::vector<std::size_t>>();
  c.dense = j.at("dense").get<std::vector<std::size_t>>();
  c.validate();
  return c;
}

namespace {

nn::ParamStore make_params(const CnnConfig& c, std::mt19937_64* rng) {
  nn::ParamStore ps;
  auto gauss = [&](std::size_t r, std::size_t k, double sd) {
    nn::Matrix m(r, k);
    if (rng) {
      std::normal_distribution<double> nd(0.0, sd);
      for (double& v : m.values()) v = nd(*rng);
    }
    return m;
  };
  std::size_t channels = 4;
  for (std::size_t i = 0; i < c.conv.size(); ++i) {
    const std::size_t fan_in = c.conv[i].width * channels;
    ps.add("conv" + std::to_string(i) + ".w",
           gauss(c.conv[i].filters, fan_in, 1.0 / std::sqrt(static_cast<double>(fan_in))));
    ps.add("conv" + std::to_string(i) + ".b", nn::Matrix(1, c.conv[i].filters));
    channels = c.conv[i].filters;
  }
  std::size_t width = channels;
  for (std::size_t i = 0; i < c.dense.size(); ++i) {
    ps.add("dense" + std::to_string(i) + ".w",
           gauss(width, c.dense[i], 1.0 / std::sqrt(static_cast<double>(width))));
    ps.add("dense" + std::to_string(i) + ".b", nn::Matrix(1, c.dense[i]));
    width = c.dense[i];
  }
  ps.add("head.w", nn::Matrix(width, 2));
  ps.add("head.b", nn::Matrix(1, 2));
  return ps;
}

}  // namespace

ToyCnn::ToyCnn(CnnConfig config, nn::ParamStore params) : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  bind();
}

ToyCnn ToyCnn::init(const CnnConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  return ToyCnn(config, make_params(config, &rng));
}

ToyCnn ToyCnn::zeros(const CnnConfig& config) {
  config.validate();
  return ToyCnn(config, make_params(config, nullptr));
}

void ToyCnn::bind() {
  auto id = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    auto p = params_.find(name);
    if (!p) throw std::invalid_argument("ToyCnn: missing parameter " + name);
    const auto& m = params_.value(*p);
    if (m.rows() != rows || m.cols() != cols) throw ShapeError("ToyCnn: parameter " + name + " has the wrong shape");
    return *p;
  };
  conv_.clear();
  dense_.clear();
  std::size_t channels = 4;
  for (std::size_t i = 0; i < config_.conv.size(); ++i) {
    const auto& spec = config_.conv[i];
    conv_.push_back({id("conv" + std::to_string(i) + ".w", spec.filters, spec.width * channels),
                     id("conv" + std::to_string(i) + ".b", 1, spec.filters)});
    channels = spec.filters;
  }
  std::size_t width = channels;
  for (std::size_t i = 0; i < config_.dense.size(); ++i) {
    dense_.push_back({id("dense" + std::to_string(i) + ".w", width, config_.dense[i]),
                      id("dense" + std::to_string(i) + ".b", 1, config_.dense[i])});
    width = config_.dense[i];
  }
  head_ = {id("head.w", width, 2), id("head.b", 1, 2)};
}

CnnNodes ToyCnn::forward_nodes(const nn::Matrix& one_hot, nn::Tape& tape) const {
  if (one_hot.cols() != 4) throw ShapeError("cnn_forward: input must have 4 channels");
  if (one_hot.rows() == 0) throw ShapeError("cnn_forward: empty input");
  CnnNodes nodes{};
  nodes.input = tape.input(one_hot);
  nn::NodeId x = nodes.input;
  for (std::size_t i = 0; i < conv_.size(); ++i) {
    x = nn::conv1d_forward(tape, x, conv_[i].w, conv_[i].b, config_.conv[i].width);
    x = tape.relu(x);
    x = tape.max_pool(x, config_.pool[i]);
  }
  x = tape.max_pool(x, tape.value(x).rows());  // global max over positions
  for (const auto& d : dense_) x = tape.relu(tape.linear(x, d.w, d.b));
  nodes.logits = tape.linear(x, head_.w, head_.b);
  return nodes;
}

}  // namespace seqlrp::models
