#pragma once

#include <vector>

#include "seqlrp/lrp/relevance_map.hpp"
#include "seqlrp/models/cnn.hpp"
#include "seqlrp/models/glm.hpp"
#include "seqlrp/nn/tape.hpp"
#include "seqlrp/seqdata/sequence.hpp"
#include "seqlrp/seqdata/tokenizer.hpp"

namespace seqlrp::lrp {

struct RuleConfig {
  enum class Start { Logit, Probability };

  double epsilon = 1e-6;
  Start start = Start::Logit;

  void validate() const;
};

/// Relevance of every tape node after a backward walk.
struct Propagation {
  std::vector<nn::Matrix> relevance;  // empty for nodes that received none
  std::vector<double> absorbed;       // per record, see RuleResult
  double total_absorbed() const;
};

/// Walks the tape backwards from `output`, seeded with `seed` (same shape as
/// the output), applying the rule that matches each record. Elementwise
/// GELU/ReLU and pure routing records pass relevance through unchanged.
Propagation propagate(const nn::Tape& tape, nn::NodeId output, const nn::Matrix& seed, const RuleConfig& cfg);

/// Seed for a 1 x 2 logit row: the target-class logit (or probability),
/// zero elsewhere.
nn::Matrix output_seed(const nn::Matrix& logits, int target, const RuleConfig& cfg);

struct ExplainDiagnostics {
  double start_relevance = 0.0;  // relevance injected at the output
  double absorbed = 0.0;         // bias, stabilizer and non-conservative remainders
};

/// Token-level map for the gLM, [CLS]/[SEP] included and flagged. A token's
/// score is the sum over its embedding dimensions.
RelevanceMap explain(const models::ToyGlm& model, const seqdata::Tokenized& input, int target,
                     const RuleConfig& cfg = {}, ExplainDiagnostics* diag = nullptr);

/// Nucleotide-level map for the CNN: per position, the sum over its four
/// input channels.
RelevanceMap explain(const models::ToyCnn& model, const seqdata::DnaSequence& seq, int target,
                     const RuleConfig& cfg = {}, ExplainDiagnostics* diag = nullptr);

}  // namespace seqlrp::lrp
