#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqlrp/seqdata/tokenizer.hpp"

namespace seqlrp::lrp {

enum class Granularity { Token, Nucleotide };
enum class Normalization { Raw, Renormalized };

std::string_view to_string(Granularity g);
std::string_view to_string(Normalization n);
Granularity granularity_from_string(std::string_view s);

/// Signed attribution scores at token or nucleotide granularity.
///
/// Token maps that still carry [CLS]/[SEP] have one flag per score in
/// `special`, and `scores.size() == partition->size() + 2`. Once the
/// specials are stripped `special` is empty.
struct RelevanceMap {
  std::string sample_id;
  std::string model;     // producing model family, e.g. "glm" or "cnn"
  std::string strategy;  // (dis-)aggregation applied, empty if none
  Granularity granularity = Granularity::Nucleotide;
  int target = 1;
  std::vector<double> scores;
  std::optional<seqdata::TokenPartition> partition;
  std::vector<bool> special;
  Normalization normalization = Normalization::Raw;

  bool has_specials() const noexcept;
  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

nlohmann::json to_json(const RelevanceMap& map);
RelevanceMap relevance_map_from_json(const nlohmann::json& j);

/// One JSON object per line.
void save_relevance_maps(const std::filesystem::path& path, const std::vector<RelevanceMap>& maps);
std::vector<RelevanceMap> load_relevance_maps(const std::filesystem::path& path);

}  // namespace seqlrp::lrp
