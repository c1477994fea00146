#pragma once

#include <array>
#include <exception>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>

#include "seqlrp/cli/config.hpp"

namespace seqlrp::cli {

inline constexpr std::array<std::string_view, 8> kCommands{"gen",     "train",        "explain", "transform",
                                                           "metrics", "faithfulness", "motifs",  "report"};

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

/// ConfigError -> 1, NumericalError -> 3, anything else -> 2.
int exit_code_for(const std::exception& e) noexcept;

/// File names of every artifact under the output directory.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path config(std::string_view command) const;
  std::filesystem::path train_data() const { return root / "data" / "train.csv"; }
  std::filesystem::path test_data() const { return root / "data" / "test.csv"; }
  std::filesystem::path checkpoint(std::string_view model) const;
  std::filesystem::path train_log(std::string_view model) const;
  std::filesystem::path vocab() const { return root / "models" / "glm_vocab.txt"; }
  std::filesystem::path raw_maps(std::string_view model) const;
  std::filesystem::path predictions(std::string_view model) const;
  /// Post-processed map sets: glm_token, glm_nucleo_c, glm_nucleo_d,
  /// cnn_nucleo, cnn_token_a, cnn_token_b.
  std::filesystem::path map_set(std::string_view name) const;
  std::filesystem::path metrics() const { return root / "metrics.tsv"; }
  std::filesystem::path faithfulness(std::string_view model) const;
  std::filesystem::path motifs() const { return root / "motifs"; }
  std::filesystem::path logos() const { return root / "motifs" / "logos"; }
  std::filesystem::path report() const { return root / "report.md"; }
};

/// Runs one command. Inputs are checked before anything is written; the
/// resolved configuration is echoed to config/<command>.json.
void run(std::string_view command, const Settings& settings, std::ostream& log);

/// gen, train, explain, transform, metrics, faithfulness, motifs, report.
void run_all(const Settings& settings, std::ostream& log);

}  // namespace seqlrp::cli
