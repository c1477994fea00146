#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "seqlrp/lrp/relevance_map.hpp"
#include "seqlrp/seqdata/tokenizer.hpp"

namespace seqlrp::attrib {

/// Token <-> nucleotide conversion strategies:
///   a_sum   token score = sum over its nucleotides
///   b_mean  token score = mean over its nucleotides
///   c_passed_on  every nucleotide gets the token score
///   d_equal      every nucleotide gets token score / token length
enum class Strategy { ASum, BMean, CPassedOn, DEqual };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);
bool is_aggregation(Strategy s) noexcept;

/// Drops [CLS]/[SEP] and divides the rest by their maximum absolute value.
/// An all-zero remainder stays all-zero. Throws std::invalid_argument for a
/// map that is not token-level or carries no special flags.
lrp::RelevanceMap strip_special_renormalize(const lrp::RelevanceMap& map);

/// Divides by the maximum absolute score (all-zero stays all-zero).
lrp::RelevanceMap renormalize(const lrp::RelevanceMap& map);

std::vector<double> aggregate(std::span<const double> nucleo, const seqdata::TokenPartition& partition,
                              Strategy strategy);
std::vector<double> disaggregate(std::span<const double> token, const seqdata::TokenPartition& partition,
                                 Strategy strategy);

/// Map-level wrappers; the partition is taken from the map.
lrp::RelevanceMap aggregate(const lrp::RelevanceMap& nucleo, const seqdata::TokenPartition& partition,
                            Strategy strategy);
lrp::RelevanceMap disaggregate(const lrp::RelevanceMap& token, Strategy strategy);

}  // namespace seqlrp::attrib
