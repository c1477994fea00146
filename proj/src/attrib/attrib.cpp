#include "seqlrp/attrib/attrib.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "seqlrp/error.hpp"

namespace seqlrp::attrib {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::ASum: return "a_sum";
    case Strategy::BMean: return "b_mean";
    case Strategy::CPassedOn: return "c_passed_on";
    case Strategy::DEqual: return "d_equal";
  }
  return "?";
}

Strategy strategy_from_string(std::string_view s) {
  if (s == "a_sum" || s == "a") return Strategy::ASum;
  if (s == "b_mean" || s == "b") return Strategy::BMean;
  if (s == "c_passed_on" || s == "c") return Strategy::CPassedOn;
  if (s == "d_equal" || s == "d") return Strategy::DEqual;
  throw std::invalid_argument("unknown strategy '" + std::string(s) + "'");
}

bool is_aggregation(Strategy s) noexcept { return s == Strategy::ASum || s == Strategy::BMean; }

namespace {

void divide_by_max_abs(std::vector<double>& v) {
  double mx = 0.0;
  for (double x : v) mx = std::max(mx, std::abs(x));
  if (mx == 0.0) return;
  for (double& x : v) x /= mx;
}

// A converted map keeps its renormalized tag only while max |score| is still 1.
lrp::Normalization carried_state(const lrp::RelevanceMap& in, const std::vector<double>& scores) {
  if (in.normalization == lrp::Normalization::Raw) return lrp::Normalization::Raw;
  double mx = 0.0;
  for (double x : scores) mx = std::max(mx, std::abs(x));
  return (mx == 0.0 || mx == 1.0) ? lrp::Normalization::Renormalized : lrp::Normalization::Raw;
}

}  // namespace

lrp::RelevanceMap strip_special_renormalize(const lrp::RelevanceMap& map) {
  if (map.granularity != lrp::Granularity::Token) throw std::invalid_argument("strip_special: map is not token-level");
  if (!map.has_specials()) throw std::invalid_argument("strip_special: map carries no special-token flags");
  lrp::RelevanceMap out = map;
  out.scores.clear();
  for (std::size_t i = 0; i < map.scores.size(); ++i)
    if (!map.special[i]) out.scores.push_back(map.scores[i]);
  out.special.clear();
  divide_by_max_abs(out.scores);
  out.normalization = lrp::Normalization::Renormalized;
  return out;
}

lrp::RelevanceMap renormalize(const lrp::RelevanceMap& map) {
  lrp::RelevanceMap out = map;
  divide_by_max_abs(out.scores);
  out.normalization = lrp::Normalization::Renormalized;
  return out;
}

std::vector<double> aggregate(std::span<const double> nucleo, const seqdata::TokenPartition& partition,
                              Strategy strategy) {
  if (!is_aggregation(strategy)) throw std::invalid_argument("aggregate: strategy must be a_sum or b_mean");
  if (nucleo.size() != partition.sequence_length())
    throw ShapeError("aggregate: " + std::to_string(nucleo.size()) + " scores for a partition of length " +
                     std::to_string(partition.sequence_length()));
  std::vector<double> out;
  out.reserve(partition.size());
  for (const auto& cell : partition.cells()) {
    double s = 0.0;
    for (std::size_t i = cell.start; i < cell.end(); ++i) s += nucleo[i];
    out.push_back(strategy == Strategy::ASum ? s : s / static_cast<double>(cell.length));
  }
  return out;
}

std::vector<double> disaggregate(std::span<const double> token, const seqdata::TokenPartition& partition,
                                 Strategy strategy) {
  if (is_aggregation(strategy)) throw std::invalid_argument("disaggregate: strategy must be c_passed_on or d_equal");
  if (token.size() != partition.size())
    throw ShapeError("disaggregate: " + std::to_string(token.size()) + " scores for " +
                     std::to_string(partition.size()) + " tokens");
  std::vector<double> out(partition.sequence_length());
  for (std::size_t j = 0; j < partition.size(); ++j) {
    const auto& cell = partition[j];
    const double v = strategy == Strategy::CPassedOn ? token[j] : token[j] / static_cast<double>(cell.length);
    for (std::size_t i = cell.start; i < cell.end(); ++i) out[i] = v;
  }
  return out;
}

lrp::RelevanceMap aggregate(const lrp::RelevanceMap& nucleo, const seqdata::TokenPartition& partition,
                            Strategy strategy) {
  if (nucleo.granularity != lrp::Granularity::Nucleotide)
    throw std::invalid_argument("aggregate: map is not nucleotide-level");
  lrp::RelevanceMap out = nucleo;
  out.scores = aggregate(nucleo.scores, partition, strategy);
  out.normalization = carried_state(nucleo, out.scores);
  out.granularity = lrp::Granularity::Token;
  out.partition = partition;
  out.special.clear();
  out.strategy = std::string(to_string(strategy));
  return out;
}

lrp::RelevanceMap disaggregate(const lrp::RelevanceMap& token, Strategy strategy) {
  if (token.granularity != lrp::Granularity::Token) throw std::invalid_argument("disaggregate: map is not token-level");
  if (token.has_specials()) throw std::invalid_argument("disaggregate: strip [CLS]/[SEP] first");
  if (!token.partition) throw std::invalid_argument("disaggregate: map has no token partition");
  lrp::RelevanceMap out = token;
  out.scores = disaggregate(token.scores, *token.partition, strategy);
  out.normalization = carried_state(token, out.scores);
  out.granularity = lrp::Granularity::Nucleotide;
  out.strategy = std::string(to_string(strategy));
  return out;
}

}  // namespace seqlrp::attrib
