#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqlrp/attrib/attrib.hpp"
#include "seqlrp/lrp/engine.hpp"
#include "seqlrp/metrics/metrics.hpp"
#include "seqlrp/models/cnn.hpp"
#include "seqlrp/motifdb/motifdb.hpp"
#include "seqlrp/nn/train.hpp"

namespace seqlrp::cli {

/// Invalid configuration or usage. Maps to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Environment variable naming the root under which relative output
/// directories are placed.
inline constexpr const char* kOutputRootEnv = "SEQLRP_OUTPUT_ROOT";

/// Every recognised key with its default value.
nlohmann::json default_config();

/// Applies `key.path=value`; the value is read as JSON when it parses and as
/// a plain string otherwise.
void apply_override(nlohmann::json& config, std::string_view assignment);

/// Defaults <- user document <- overrides. Unknown keys and values whose
/// type differs from the default throw ConfigError.
nlohmann::json resolve_config(const nlohmann::json& user, const std::vector<std::string>& overrides = {});

nlohmann::json load_config_file(const std::filesystem::path& path);

struct GenSettings {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t length = 0;
  std::string motif;
  std::filesystem::path train;  // ingest instead of generating when set
  std::filesystem::path test;
};

struct MetricsSettings {
  std::string subset;
  std::vector<std::pair<std::string, std::string>> pairs;  // empty: default pairs
};

struct FaithfulnessSettings {
  std::vector<double> ks;
  std::vector<metrics::Order> orders;
  std::vector<metrics::Scheme> schemes;
  std::string subset;
  bool absolute = false;
};

struct MotifSettings {
  std::filesystem::path database;
  std::vector<std::string> sets;
  std::string subset;
  motifdb::SeqletConfig seqlets;
  motifdb::ClusterConfig clusters;
  motifdb::MatchConfig match;
  double p_cutoff = 0.05;
  std::size_t max_logos = 0;
  std::size_t sample_logos = 0;
};

/// Typed view of a resolved configuration, fully validated.
struct Settings {
  nlohmann::json resolved;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  GenSettings gen;
  std::filesystem::path vocab;
  std::vector<std::string> models;
  nlohmann::json glm;  // architecture without the vocabulary-derived fields
  models::CnnConfig cnn;
  std::map<std::string, nn::TrainConfig> train;
  lrp::RuleConfig rules;
  int target = 1;
  bool renormalize_first = true;
  MetricsSettings metrics;
  FaithfulnessSettings faithfulness;
  MotifSettings motifs;

  static Settings from(const nlohmann::json& resolved);
};

/// Per-step seed derived from the run seed.
std::uint64_t step_seed(std::uint64_t seed, std::string_view step);

}  // namespace seqlrp::cli
