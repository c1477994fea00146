#include "seqlrp/nn/params.hpp"

#include <stdexcept>

namespace seqlrp::nn {

ParamId ParamStore::add(std::string name, Matrix init) {
  if (find(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  return values_.size() - 1;
}

std::size_t ParamStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

std::optional<ParamId> ParamStore::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::vector<Matrix> ParamStore::zeros_like() const {
  std::vector<Matrix> out;
  out.reserve(values_.size());
  for (const auto& v : values_) out.emplace_back(v.rows(), v.cols());
  return out;
}

}  // namespace seqlrp::nn
