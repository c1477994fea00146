#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seqlrp/nn/matrix.hpp"

namespace seqlrp::nn {

using ParamId = std::size_t;

/// Named, ordered collection of trainable tensors.
class ParamStore {
 public:
  ParamId add(std::string name, Matrix init);

  std::size_t size() const noexcept { return values_.size(); }
  std::size_t scalar_count() const noexcept;

  const Matrix& value(ParamId id) const { return values_.at(id); }
  Matrix& value(ParamId id) { return values_.at(id); }
  const std::string& name(ParamId id) const { return names_.at(id); }
  std::optional<ParamId> find(std::string_view name) const;

  /// Zero tensors shaped like every parameter.
  std::vector<Matrix> zeros_like() const;

  friend bool operator==(const ParamStore&, const ParamStore&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

}  // namespace seqlrp::nn
