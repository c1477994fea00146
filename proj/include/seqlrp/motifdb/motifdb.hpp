#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqlrp/lrp/relevance_map.hpp"
#include "seqlrp/seqdata/dataset.hpp"

namespace seqlrp::motifdb {

using Column = std::array<double, 4>;  // A, C, G, T

struct Seqlet {
  std::string sample_id;
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  std::vector<double> scores;
  std::string letters;

  std::size_t width() const noexcept { return end - start + 1; }
};

struct SeqletConfig {
  std::size_t window = 10;
  double percentile = 90.0;
  double sd_factor = 2.0;
  /// Score windows by |r| instead of the positive part of r.
  bool absolute = false;
};

struct SeqletReport {
  std::vector<Seqlet> seqlets;
  /// Ids of sequences shorter than the window.
  std::vector<std::string> skipped;
  double global_threshold = 0.0;
};

/// maps[i] explains samples[i]; both must be nucleotide level and of equal
/// length.
SeqletReport extract_seqlets(std::span<const lrp::RelevanceMap> maps, std::span<const seqdata::Sample> samples,
                             const SeqletConfig& cfg = {});

struct Pwm {
  std::string id;
  std::vector<Column> columns;
  std::size_t support = 0;

  std::size_t width() const noexcept { return columns.size(); }
  /// Throws std::invalid_argument unless every column is a distribution.
  void validate() const;
};

/// One-hot PWM for a DNA string (N gives a uniform column).
Pwm one_hot_pwm(std::string_view letters, std::string id = "");
Pwm reverse_complement(const Pwm& pwm);

/// IC = 2 + sum_b f_b log2 f_b, per column.
std::vector<double> info_content(const Pwm& pwm);

struct ClusterMember {
  std::size_t seqlet = 0;
  /// Centroid column of the member's first (oriented) column.
  long offset = 0;
  bool reverse = false;
};

struct Cluster {
  Pwm pwm;
  std::vector<ClusterMember> members;
  /// Leading columns removed by trimming.
  std::size_t trimmed_left = 0;
};

struct ClusterConfig {
  double similarity = 0.6;
  double trim_ic = 0.2;
  /// Minimum overlap as a fraction of the seqlet width.
  double min_overlap = 0.5;
};

/// Cosine similarity of relevance-weighted one-hot matrices, maximized over
/// offsets and orientation.
struct Alignment {
  double score = 0.0;
  long offset = 0;
  bool reverse = false;
};
using Weighted = std::vector<Column>;
Weighted weighted_one_hot(const Seqlet& s);
Alignment best_alignment(const Weighted& centroid, const Weighted& member, std::size_t min_overlap);

/// Greedy, order-dependent clustering. Clusters come back ordered by
/// support (ties by creation order); PWM ids are "motif_1", "motif_2", ...
std::vector<Cluster> build_pwms(std::span<const Seqlet> seqlets, const ClusterConfig& cfg = {});

struct MotifDatabase {
  std::vector<Pwm> motifs;
};

/// MEME minimal motif format. Throws ParseError with a line number.
MotifDatabase parse_meme(std::string_view text);
MotifDatabase load_meme(const std::filesystem::path& path);
std::string to_meme(std::span<const Pwm> motifs);

enum class NullModel {
  /// Shuffle column order only.
  ColumnShuffle,
  /// Shuffle column order and permute the letters within each column.
  ColumnAndLetterShuffle,
};

struct MatchConfig {
  std::size_t nulls = 1000;
  std::uint64_t seed = 0;
  std::size_t min_overlap = 4;
  NullModel null_model = NullModel::ColumnAndLetterShuffle;
};

struct MotifMatch {
  std::string query;
  std::string target;
  /// Target column aligned with the first column of the oriented query.
  long offset = 0;
  bool reverse = false;
  double score = 0.0;
  double p_value = 1.0;
};

/// Pearson correlation of two probability columns. Two constant columns
/// correlate perfectly; one constant column gives 0.
double column_pearson(const Column& a, const Column& b);

struct PairScore {
  double score = -1.0;
  long offset = 0;
  bool reverse = false;
};
/// Best alignment over offsets (overlap >= min_overlap, or the shorter width)
/// and orientations. Score = sum of column Pearson over the overlap divided
/// by the shorter width.
PairScore align_pwms(const Pwm& query, const Pwm& target, std::size_t min_overlap);

/// Best target per query, sorted by p-value then score.
std::vector<MotifMatch> match_database(std::span<const Pwm> queries, const MotifDatabase& db,
                                       const MatchConfig& cfg = {});

std::string matches_tsv(std::span<const MotifMatch> matches);

/// Information-content logo: letter heights f_b * IC.
std::string render_logo(const Pwm& pwm);
/// Relevance logo: one letter per position with height |r_i|, below the
/// baseline when r_i < 0.
std::string render_logo(const lrp::RelevanceMap& map, std::string_view letters);

}  // namespace seqlrp::motifdb
