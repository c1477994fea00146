#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "seqlrp/nn/params.hpp"

namespace seqlrp::nn {

/// Checkpoint layout (all integers little-endian):
///
///   8 bytes   magic "SEQLRPCK"
///   u32       format version (1)
///   u32       header length H
///   H bytes   UTF-8 JSON architecture header
///   u32       parameter count P
///   P times:  u32 name length, name bytes, u32 rows, u32 cols,
///             rows * cols IEEE-754 binary64 values, row-major
struct Checkpoint {
  nlohmann::json header;
  ParamStore params;
};

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& header, const ParamStore& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const nlohmann::json& header, const ParamStore& params);
Checkpoint decode_checkpoint(const std::string& bytes);

}  // namespace seqlrp::nn
