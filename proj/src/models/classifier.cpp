#include "seqlrp/models/classifier.hpp"

#include "seqlrp/error.hpp"
#include "seqlrp/nn/checkpoint.hpp"
#include "seqlrp/nn/train.hpp"

namespace seqlrp::models {

seqdata::TokenPartition GlmClassifier::units(const seqdata::DnaSequence& seq) const {
  return seqdata::bpe_tokenize(seq, vocab_).partition;
}

double GlmClassifier::probability(const seqdata::DnaSequence& seq, int target) const {
  return nn::class_probability(nn::logits_of(model_, seqdata::bpe_tokenize(seq, vocab_).ids), target);
}

double GlmClassifier::probability_unknown(const seqdata::DnaSequence& seq, std::span<const std::size_t> units,
                                          int target) const {
  auto tok = seqdata::bpe_tokenize(seq, vocab_);
  for (std::size_t j : units) tok.ids.at(j + 1) = vocab_.unk_id();
  return nn::class_probability(nn::logits_of(model_, tok.ids), target);
}

seqdata::TokenPartition CnnClassifier::units(const seqdata::DnaSequence& seq) const {
  return seqdata::TokenPartition::singletons(seq.length());
}

double CnnClassifier::probability(const seqdata::DnaSequence& seq, int target) const {
  return nn::class_probability(nn::logits_of(model_, seqdata::one_hot_encode(seq)), target);
}

double CnnClassifier::probability_unknown(const seqdata::DnaSequence& seq, std::span<const std::size_t> units,
                                          int target) const {
  std::string s = seq.str();
  for (std::size_t i : units) s.at(i) = 'N';
  return probability(seqdata::DnaSequence(std::move(s)), target);
}

void save_model(const std::filesystem::path& path, const ToyGlm& model) {
  nn::save_checkpoint(path, {{"model", "glm"}, {"config", model.config().to_json()}}, model.params());
}

void save_model(const std::filesystem::path& path, const ToyCnn& model) {
  nn::save_checkpoint(path, {{"model", "cnn"}, {"config", model.config().to_json()}}, model.params());
}

AnyModel load_model(const std::filesystem::path& path) {
  nn::Checkpoint ck = nn::load_checkpoint(path);
  try {
    const std::string kind = ck.header.at("model");
    if (kind == "glm") return ToyGlm(GlmConfig::from_json(ck.header.at("config")), std::move(ck.params));
    if (kind == "cnn") return ToyCnn(CnnConfig::from_json(ck.header.at("config")), std::move(ck.params));
    throw ParseError("checkpoint: unknown model kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: malformed header: ") + e.what());
  }
}

}  // namespace seqlrp::models
