#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqlrp/lrp/relevance_map.hpp"
#include "seqlrp/models/classifier.hpp"
#include "seqlrp/seqdata/dataset.hpp"

namespace seqlrp::metrics {

/// Continuous Jaccard similarity in [-1, 1]:
/// sum sign(v)sign(w)min(|v|,|w|) / sum max(|v|,|w|); 0 when both are zero.
double continuous_jaccard(std::span<const double> v, std::span<const double> w);

/// Gini index of |r| in [0, 1); 0 for an all-zero input.
double gini_index(std::span<const double> r);

/// Shannon entropy (nats) of p_i = |r_i| / sum |r|. Throws
/// std::invalid_argument when r is all zero.
double shannon_entropy(std::span<const double> r);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for fewer than 2 values
};
MeanSd mean_sd(std::span<const double> values);
double median(std::vector<double> values);

enum class Order { MIF, LIF };
enum class Scheme { Unknown, Random, Complement };

std::string_view to_string(Order o);
std::string_view to_string(Scheme s);
Order order_from_string(std::string_view s);
Scheme scheme_from_string(std::string_view s);

struct FaithfulnessOptions {
  Order order = Order::MIF;
  Scheme scheme = Scheme::Unknown;
  std::vector<double> ks{1, 5, 10, 20, 50};
  std::uint64_t seed = 0;
  /// Rank by |score| instead of the signed score.
  bool absolute = false;
};

struct CurvePoint {
  double k = 0.0;
  double delta = 0.0;  // mean over samples
  double sd = 0.0;
};

struct FaithfulnessCurve {
  Order order = Order::MIF;
  Scheme scheme = Scheme::Unknown;
  std::vector<CurvePoint> points;
  std::size_t samples = 0;
};

/// Units selected for perturbation at budget k percent: units are ranked by
/// score (descending for MIF, ascending for LIF, ties by position) and taken
/// until their total nucleotide count first reaches ceil(k * l / 100).
std::vector<std::size_t> select_units(std::span<const double> scores, const seqdata::TokenPartition& units,
                                      Order order, double k, bool absolute = false);

/// Per-sample prediction drops, one per k: p(target | original) -
/// p(target | perturbed). `sample_index` seeds the random scheme together
/// with `opts.seed`.
std::vector<double> faithfulness_deltas(const models::SequenceClassifier& model, const seqdata::DnaSequence& seq,
                                        std::span<const double> unit_scores, int target,
                                        const FaithfulnessOptions& opts, std::size_t sample_index);

/// Dataset average. maps[i] explains samples[i]: token granularity for the
/// gLM (specials stripped), nucleotide granularity for the CNN.
FaithfulnessCurve faithfulness_curve(const models::SequenceClassifier& model,
                                     std::span<const seqdata::Sample> samples,
                                     std::span<const lrp::RelevanceMap> maps, const FaithfulnessOptions& opts);

/// Deterministic per-sample seed derived from a base seed and an index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Table row: metric, granularity, strategy, mean value and sd.
struct MetricRow {
  std::string model;
  std::string metric;
  std::string granularity;
  std::string strategy;
  double value = 0.0;
  double sd = 0.0;
};

std::string metrics_tsv(std::span<const MetricRow> rows);
/// Columns: model, order, scheme, k, delta, sd, samples.
std::string curves_tsv(std::string_view model, std::span<const FaithfulnessCurve> curves);

}  // namespace seqlrp::metrics
