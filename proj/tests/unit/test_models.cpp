#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "glm_oracle.hpp"
#include "seqlrp/error.hpp"
#include "seqlrp/models/classifier.hpp"
#include "seqlrp/models/cnn.hpp"
#include "seqlrp/models/glm.hpp"
#include "seqlrp/nn/train.hpp"
#include "seqlrp/seqdata/sequence.hpp"
#include "seqlrp/seqdata/tokenizer.hpp"

using namespace seqlrp;
using namespace seqlrp::models;

namespace {

GlmConfig tiny_glm(std::size_t vocab, std::size_t dim = 2, std::size_t heads = 1, std::size_t layers = 1,
                   std::size_t ffn = 3) {
  GlmConfig c;
  c.layers = layers;
  c.heads = heads;
  c.dim = dim;
  c.ffn_dim = ffn;
  c.vocab_size = vocab;
  c.max_length = 64;
  c.pad_id = 0;
  c.cls_id = 2;
  c.sep_id = 3;
  return c;
}

void randomize(nn::ParamStore& ps, std::uint64_t seed, double sd) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, sd);
  for (nn::ParamId p = 0; p < ps.size(); ++p)
    for (auto& v : ps.value(p).values()) v = nd(rng);
}

nn::Matrix logits(const ToyGlm& m, const std::vector<int>& ids) { return nn::logits_of(m, ids); }

}  // namespace

TEST(GlmConfig, ValidationAndJson) {
  GlmConfig c = tiny_glm(8, 4, 2);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(GlmConfig::from_json(c.to_json()), c);
  c.heads = 3;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = tiny_glm(0);
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(ToyGlm, ZeroModelGivesEvenOdds) {
  const auto m = ToyGlm::zeros(tiny_glm(8, 4, 2, 2));
  const auto lg = logits(m, {2, 4, 5, 3});
  EXPECT_EQ(lg(0, 0), 0.0);
  EXPECT_EQ(lg(0, 1), 0.0);
  EXPECT_EQ(nn::class_probability(lg, 1), 0.5);
}

TEST(ToyGlm, InitialisedHeadIsZero) {
  const auto m = ToyGlm::init(tiny_glm(8, 8, 2, 2, 16), 1);
  const auto lg = logits(m, {2, 4, 5, 6, 3});
  EXPECT_EQ(lg(0, 0), 0.0);
  EXPECT_EQ(lg(0, 1), 0.0);
}

TEST(ToyGlm, MatchesHandTrace) {
  auto m = ToyGlm::init(tiny_glm(6), 3);
  randomize(m.mutable_params(), 5, 0.8);
  for (const std::vector<int>& ids : {std::vector<int>{2, 4, 3}, std::vector<int>{2, 5, 4, 3}}) {
    const auto lg = logits(m, ids);
    const auto ref = oracle::run(m.params(), ids, 1, 1e-6);
    EXPECT_NEAR(lg(0, 0), ref.logits[0], 1e-9);
    EXPECT_NEAR(lg(0, 1), ref.logits[1], 1e-9);
  }
}

TEST(ToyGlm, InputValidation) {
  const auto m = ToyGlm::init(tiny_glm(8, 4, 2), 1);
  EXPECT_THROW(logits(m, {2, 9, 3}), std::invalid_argument);   // unknown id
  EXPECT_THROW(logits(m, {2, -1, 3}), std::invalid_argument);  // unknown id
  EXPECT_THROW(logits(m, {4, 5, 3}), std::invalid_argument);   // no [CLS]
  EXPECT_THROW(logits(m, {2, 4, 5}), std::invalid_argument);   // no [SEP]
  EXPECT_THROW(logits(m, {2}), std::invalid_argument);
  std::vector<int> longer(65, 4);
  longer.front() = 2;
  longer.back() = 3;
  EXPECT_THROW(logits(m, longer), std::invalid_argument);  // over-length
}

TEST(ToyGlm, PaddingAfterSepIsMasked) {
  auto m = ToyGlm::init(tiny_glm(8, 8, 2, 2, 8), 4);
  randomize(m.mutable_params(), 9, 0.5);
  const auto a = logits(m, {2, 4, 5, 6, 3});
  const auto b = logits(m, {2, 4, 5, 6, 3, 0, 0, 0});
  EXPECT_NEAR(a(0, 0), b(0, 0), 1e-12);
  EXPECT_NEAR(a(0, 1), b(0, 1), 1e-12);
}

TEST(ToyGlm, DeterministicAndRowStochastic) {
  auto m = ToyGlm::init(tiny_glm(8, 8, 2, 2, 8), 4);
  randomize(m.mutable_params(), 10, 0.5);
  EXPECT_EQ(logits(m, {2, 4, 5, 6, 3}), logits(m, {2, 4, 5, 6, 3}));
  const auto swapped = logits(m, {2, 6, 5, 4, 3});
  EXPECT_NE(swapped, logits(m, {2, 4, 5, 6, 3}));
  nn::Tape t(m.params());
  m.forward(std::vector<int>{2, 6, 5, 4, 3}, t);
  std::size_t softmaxes = 0;
  for (const auto& rec : t.records()) {
    if (rec.kind != nn::OpKind::Softmax) continue;
    ++softmaxes;
    for (std::size_t i = 0; i < rec.value.rows(); ++i) {
      double s = 0.0;
      for (double v : rec.value.row(i)) {
        EXPECT_GE(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
  EXPECT_EQ(softmaxes, 4u);  // 2 layers x 2 heads
}

TEST(ToyGlm, TapeReplay) {
  auto m = ToyGlm::init(tiny_glm(8, 4, 2, 2, 6), 2);
  randomize(m.mutable_params(), 3, 0.5);
  nn::Tape t(m.params());
  m.forward(std::vector<int>{2, 4, 5, 3, 0}, t);
  for (nn::NodeId id = 0; id < t.size(); ++id) EXPECT_EQ(nn::recompute(t, id), t.value(id));
}

TEST(ToyGlm, GradientCheck) {
  auto m = ToyGlm::init(tiny_glm(8, 8, 2, 2, 8), 6);
  randomize(m.mutable_params(), 7, 0.4);
  EXPECT_LT(nn::gradcheck(m, std::vector<int>{2, 4, 5, 6, 7, 4, 3}, 1), 1e-4);
}

TEST(CnnConfig, ValidationAndJson) {
  CnnConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(CnnConfig::from_json(c.to_json()), c);
  c.conv[0].width = 4;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.conv.clear();
  c.pool.clear();
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.pool = {4};
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(ToyCnn, ZeroModelAndAllNInput) {
  const auto z = ToyCnn::zeros(CnnConfig{});
  const auto lg = nn::logits_of(z, seqdata::one_hot_encode(seqdata::DnaSequence(std::string(40, 'A'))));
  EXPECT_EQ(lg(0, 0), 0.0);
  EXPECT_EQ(lg(0, 1), 0.0);

  auto m = ToyCnn::init(CnnConfig{}, 1);
  randomize(m.mutable_params(), 2, 0.5);
  for (nn::ParamId p = 0; p < m.params().size(); ++p)
    if (m.params().name(p).ends_with(".b")) m.mutable_params().value(p).fill(0.0);
  const auto n = nn::logits_of(m, seqdata::one_hot_encode(seqdata::DnaSequence(std::string(40, 'N'))));
  EXPECT_EQ(n(0, 0), 0.0);
  EXPECT_EQ(n(0, 1), 0.0);
}

namespace {

// One conv filter that fires on "A", pooled with width 1, identity dense,
// head reading the pooled count into class 1.
ToyCnn a_detector() {
  CnnConfig c;
  c.conv = {{1, 1}};
  c.pool = {1};
  c.dense = {};
  auto m = ToyCnn::zeros(c);
  auto& ps = m.mutable_params();
  ps.value(*ps.find("conv0.w"))(0, 0) = 1.0;
  ps.value(*ps.find("head.w"))(0, 1) = 1.0;
  return m;
}

}  // namespace

TEST(ToyCnn, ADetector) {
  const auto m = a_detector();
  const auto few = nn::logits_of(m, seqdata::one_hot_encode(seqdata::DnaSequence("CCCCA")));
  const auto none = nn::logits_of(m, seqdata::one_hot_encode(seqdata::DnaSequence("CCCCC")));
  EXPECT_GT(few(0, 1), none(0, 1));

  // With a summing stage: 3-wide conv counting A's in its window.
  CnnConfig c;
  c.conv = {{1, 3}};
  c.pool = {1};
  c.dense = {};
  auto w = ToyCnn::zeros(c);
  auto& ps = w.mutable_params();
  for (std::size_t t = 0; t < 3; ++t) ps.value(*ps.find("conv0.w"))(0, t * 4) = 1.0;
  ps.value(*ps.find("head.w"))(0, 1) = 1.0;
  const auto one = nn::logits_of(w, seqdata::one_hot_encode(seqdata::DnaSequence("CCACC")));
  const auto three = nn::logits_of(w, seqdata::one_hot_encode(seqdata::DnaSequence("CAAAC")));
  EXPECT_GT(three(0, 1), one(0, 1));
}

TEST(ToyCnn, ShapeErrors) {
  const auto m = ToyCnn::init(CnnConfig{}, 1);
  EXPECT_THROW(nn::logits_of(m, nn::Matrix(10, 3)), ShapeError);
  EXPECT_THROW(nn::logits_of(m, nn::Matrix(3, 4)), ShapeError);  // shorter than the conv width
}

TEST(ToyCnn, PoolWinnersRecordedAndReplay) {
  auto m = ToyCnn::init(CnnConfig{}, 1);
  randomize(m.mutable_params(), 8, 0.4);
  nn::Tape t(m.params());
  m.forward(seqdata::one_hot_encode(seqdata::DnaSequence("ACGTTGCAACGTAGCTAGCTAGGATC")), t);
  std::size_t pools = 0;
  for (nn::NodeId id = 0; id < t.size(); ++id) {
    EXPECT_EQ(nn::recompute(t, id), t.value(id));
    if (t.record(id).kind == nn::OpKind::MaxPool) {
      ++pools;
      const auto& a = std::get<nn::PoolAttrs>(t.record(id).attrs);
      EXPECT_EQ(a.winners.size(), t.value(id).size());
    }
  }
  EXPECT_EQ(pools, 3u);
}

TEST(ToyCnn, GradientCheck) {
  CnnConfig c;
  c.conv = {{4, 3}, {3, 3}};
  c.pool = {2, 2};
  c.dense = {5};
  auto m = ToyCnn::init(c, 3);
  randomize(m.mutable_params(), 4, 0.5);
  EXPECT_LT(nn::gradcheck(m, seqdata::one_hot_encode(seqdata::DnaSequence("ACGTTGCAACGT")), 1), 1e-4);
}

TEST(Checkpoint, ModelRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "seqlrp_models_test";
  std::filesystem::create_directories(dir);
  auto g = ToyGlm::init(tiny_glm(8, 4, 2, 2, 6), 2);
  randomize(g.mutable_params(), 1, 0.3);
  save_model(dir / "g.ckpt", g);
  const auto lg = load_model(dir / "g.ckpt");
  ASSERT_TRUE(std::holds_alternative<ToyGlm>(lg));
  EXPECT_EQ(std::get<ToyGlm>(lg).config(), g.config());
  EXPECT_EQ(std::get<ToyGlm>(lg).params(), g.params());

  const auto c = ToyCnn::init(CnnConfig{}, 5);
  save_model(dir / "c.ckpt", c);
  const auto lc = load_model(dir / "c.ckpt");
  ASSERT_TRUE(std::holds_alternative<ToyCnn>(lc));
  EXPECT_EQ(std::get<ToyCnn>(lc).params(), c.params());
  std::filesystem::remove_all(dir);
}

TEST(Classifier, UnitsAndUnknownPerturbation) {
  const auto vocab = seqdata::Vocab::kmers(2);
  GlmConfig gc = tiny_glm(vocab.size(), 4, 2, 1, 4);
  gc.cls_id = vocab.cls_id();
  gc.sep_id = vocab.sep_id();
  gc.pad_id = vocab.pad_id();
  auto g = ToyGlm::init(gc, 1);
  randomize(g.mutable_params(), 2, 0.5);
  const GlmClassifier gcls(g, vocab);
  const seqdata::DnaSequence seq("ACGTA");
  EXPECT_EQ(gcls.units(seq), seqdata::TokenPartition::from_sizes({2, 2, 1}));
  const std::vector<std::size_t> none;
  EXPECT_DOUBLE_EQ(gcls.probability_unknown(seq, none, 1), gcls.probability(seq, 1));
  auto ids = seqdata::bpe_tokenize(seq, vocab).ids;
  ids[2] = vocab.unk_id();
  const std::vector<std::size_t> second{1};
  EXPECT_DOUBLE_EQ(gcls.probability_unknown(seq, second, 1), nn::class_probability(nn::logits_of(g, ids), 1));
  EXPECT_NEAR(gcls.probability(seq, 0) + gcls.probability(seq, 1), 1.0, 1e-15);

  auto c = ToyCnn::init(CnnConfig{}, 1);
  randomize(c.mutable_params(), 3, 0.5);
  const CnnClassifier ccls(c);
  std::string letters;
  for (int i = 0; i < 10; ++i) letters += "ACGT";
  const seqdata::DnaSequence s2(letters);
  EXPECT_EQ(ccls.units(s2), seqdata::TokenPartition::singletons(40));
  const std::vector<std::size_t> first{0, 3};
  letters[0] = letters[3] = 'N';
  EXPECT_DOUBLE_EQ(ccls.probability_unknown(s2, first, 1), ccls.probability(seqdata::DnaSequence(letters), 1));
}
