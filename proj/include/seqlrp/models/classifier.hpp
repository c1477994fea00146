#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string_view>
#include <variant>

#include "seqlrp/models/cnn.hpp"
#include "seqlrp/models/glm.hpp"
#include "seqlrp/seqdata/sequence.hpp"
#include "seqlrp/seqdata/tokenizer.hpp"

namespace seqlrp::models {

/// Sequence-level view of a trained model, as needed by perturbation
/// experiments: its attribution units and target-class probabilities.
class SequenceClassifier {
 public:
  virtual ~SequenceClassifier() = default;

  virtual std::string_view family() const = 0;
  /// Attribution units of `seq`: tokens for the gLM, nucleotides for the CNN.
  virtual seqdata::TokenPartition units(const seqdata::DnaSequence& seq) const = 0;
  virtual double probability(const seqdata::DnaSequence& seq, int target) const = 0;
  /// Probability after replacing the listed units by the unknown symbol
  /// ([UNK] tokens for the gLM, N for the CNN).
  virtual double probability_unknown(const seqdata::DnaSequence& seq, std::span<const std::size_t> units,
                                     int target) const = 0;
};

class GlmClassifier final : public SequenceClassifier {
 public:
  GlmClassifier(const ToyGlm& model, const seqdata::Vocab& vocab) : model_(model), vocab_(vocab) {}

  std::string_view family() const override { return "glm"; }
  seqdata::TokenPartition units(const seqdata::DnaSequence& seq) const override;
  double probability(const seqdata::DnaSequence& seq, int target) const override;
  double probability_unknown(const seqdata::DnaSequence& seq, std::span<const std::size_t> units,
                             int target) const override;

 private:
  const ToyGlm& model_;
  const seqdata::Vocab& vocab_;
};

class CnnClassifier final : public SequenceClassifier {
 public:
  explicit CnnClassifier(const ToyCnn& model) : model_(model) {}

  std::string_view family() const override { return "cnn"; }
  seqdata::TokenPartition units(const seqdata::DnaSequence& seq) const override;
  double probability(const seqdata::DnaSequence& seq, int target) const override;
  double probability_unknown(const seqdata::DnaSequence& seq, std::span<const std::size_t> units,
                             int target) const override;

 private:
  const ToyCnn& model_;
};

using AnyModel = std::variant<ToyGlm, ToyCnn>;

/// Checkpoint header: {"model": "glm"|"cnn", "config": {...}}.
void save_model(const std::filesystem::path& path, const ToyGlm& model);
void save_model(const std::filesystem::path& path, const ToyCnn& model);
AnyModel load_model(const std::filesystem::path& path);

}  // namespace seqlrp::models
