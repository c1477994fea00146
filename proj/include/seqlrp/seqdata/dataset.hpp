#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seqlrp/seqdata/sequence.hpp"

namespace seqlrp::seqdata {

struct Sample {
  std::string id;
  DnaSequence sequence;
  int label = 0;
  /// 0-based start of a planted motif, when known.
  std::optional<std::size_t> motif_start;
};

enum class Split { Train, Test };

struct LabeledDataset {
  std::vector<Sample> samples;
  Split split = Split::Train;

  std::size_t size() const noexcept { return samples.size(); }
};

enum class DatasetFormat { Fasta, Csv };

DatasetFormat format_from_path(const std::filesystem::path& path);

/// CSV: `sequence,label[,motif_start]` with an optional header row.
/// FASTA: `>id [label=0|1] [motif_start=k]` followed by one or more sequence
/// lines; a header without `label=` means label 0.
/// Letters are upper-cased and anything outside {A,C,G,T} becomes N.
LabeledDataset parse_dataset(std::string_view text, DatasetFormat format);
LabeledDataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
LabeledDataset load_dataset(const std::filesystem::path& path);

std::string to_csv(const LabeledDataset& data);
void save_csv(const LabeledDataset& data, const std::filesystem::path& path);

/// Per-position letter probabilities (A, C, G, T), used to sample motifs.
using ProbabilityColumns = std::vector<std::array<double, 4>>;

/// Balanced synthetic set: n/2 uniform-random negatives and n/2 positives
/// with the motif written over a uniformly placed window. Samples alternate
/// negative, positive. Deterministic in `seed`.
LabeledDataset gen_planted(std::size_t n, std::size_t length, const DnaSequence& motif, std::uint64_t seed);

/// Same layout, but every positive draws a fresh motif instance from `pwm`.
LabeledDataset gen_planted(std::size_t n, std::size_t length, const ProbabilityColumns& pwm, std::uint64_t seed);

}  // namespace seqlrp::seqdata
