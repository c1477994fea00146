#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "seqlrp/attrib/attrib.hpp"
#include "seqlrp/error.hpp"

using namespace seqlrp;
using namespace seqlrp::attrib;
using seqdata::TokenPartition;

namespace {

lrp::RelevanceMap token_map(std::vector<double> scores, std::vector<std::size_t> sizes) {
  lrp::RelevanceMap m;
  m.model = "glm";
  m.granularity = lrp::Granularity::Token;
  m.partition = TokenPartition::from_sizes(sizes);
  m.special.assign(scores.size(), false);
  m.special.front() = m.special.back() = true;
  m.scores = std::move(scores);
  return m;
}

TokenPartition random_partition(std::mt19937_64& rng, std::size_t length) {
  std::vector<std::size_t> sizes;
  std::size_t left = length;
  while (left > 0) {
    const std::size_t s = std::min<std::size_t>(left, 1 + rng() % 6);
    sizes.push_back(s);
    left -= s;
  }
  return TokenPartition::from_sizes(sizes);
}

std::vector<double> random_scores(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST(StrategyNames, RoundTrip) {
  for (auto s : {Strategy::ASum, Strategy::BMean, Strategy::CPassedOn, Strategy::DEqual})
    EXPECT_EQ(strategy_from_string(to_string(s)), s);
  EXPECT_THROW(strategy_from_string("e"), std::invalid_argument);
}

TEST(StripSpecial, Examples) {
  const auto out = strip_special_renormalize(token_map({5.0, 0.2, -0.4, 3.0}, {2, 1}));
  ASSERT_EQ(out.scores.size(), 2u);
  EXPECT_DOUBLE_EQ(out.scores[0], 0.5);
  EXPECT_DOUBLE_EQ(out.scores[1], -1.0);
  EXPECT_TRUE(out.special.empty());
  EXPECT_EQ(out.normalization, lrp::Normalization::Renormalized);
  EXPECT_NO_THROW(out.validate());

  const auto zero = strip_special_renormalize(token_map({1.0, 0.0, 0.0, 1.0}, {1, 1}));
  EXPECT_EQ(zero.scores, (std::vector<double>{0.0, 0.0}));
  EXPECT_NO_THROW(zero.validate());

  EXPECT_THROW(strip_special_renormalize(out), std::invalid_argument);
  auto nucleo = out;
  nucleo.granularity = lrp::Granularity::Nucleotide;
  EXPECT_THROW(strip_special_renormalize(nucleo), std::invalid_argument);
}

TEST(StripSpecial, PreservesOrderAndIsIdempotent) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    auto inner = random_scores(rng, 12);
    std::vector<double> scores{9.0};
    scores.insert(scores.end(), inner.begin(), inner.end());
    scores.push_back(-7.0);
    const auto out = strip_special_renormalize(token_map(scores, std::vector<std::size_t>(12, 1)));
    std::vector<std::size_t> a(12), b(12);
    std::iota(a.begin(), a.end(), 0);
    std::iota(b.begin(), b.end(), 0);
    std::stable_sort(a.begin(), a.end(), [&](auto i, auto j) { return inner[i] < inner[j]; });
    std::stable_sort(b.begin(), b.end(), [&](auto i, auto j) { return out.scores[i] < out.scores[j]; });
    EXPECT_EQ(a, b);
    double mx = 0.0;
    for (double s : out.scores) mx = std::max(mx, std::abs(s));
    EXPECT_DOUBLE_EQ(mx, 1.0);
    EXPECT_EQ(renormalize(out).scores, out.scores);
  }
}

TEST(Aggregate, Examples) {
  const auto p = TokenPartition::from_sizes({2, 1});
  const std::vector<double> r{0.2, 0.4, -0.1};
  const auto a = aggregate(r, p, Strategy::ASum);
  EXPECT_NEAR(a[0], 0.6, 1e-15);
  EXPECT_EQ(a[1], -0.1);
  const auto b = aggregate(r, p, Strategy::BMean);
  EXPECT_NEAR(b[0], 0.3, 1e-15);
  EXPECT_EQ(b[1], -0.1);

  const auto single = TokenPartition::singletons(3);
  EXPECT_EQ(aggregate(r, single, Strategy::ASum), r);
  EXPECT_EQ(aggregate(r, single, Strategy::BMean), r);
}

TEST(Aggregate, Errors) {
  const auto p = TokenPartition::from_sizes({2, 1});
  EXPECT_THROW(aggregate(std::vector<double>{1.0, 2.0}, p, Strategy::ASum), ShapeError);
  EXPECT_THROW(aggregate(std::vector<double>{1.0, 2.0, 3.0}, p, Strategy::CPassedOn), std::invalid_argument);
  EXPECT_THROW(disaggregate(std::vector<double>{1.0}, p, Strategy::DEqual), ShapeError);
  EXPECT_THROW(disaggregate(std::vector<double>{1.0, 2.0}, p, Strategy::ASum), std::invalid_argument);
}

TEST(Disaggregate, Examples) {
  const auto p = TokenPartition::from_sizes({2, 1});
  const std::vector<double> t{0.6, -0.1};
  EXPECT_EQ(disaggregate(t, p, Strategy::CPassedOn), (std::vector<double>{0.6, 0.6, -0.1}));
  const auto d = disaggregate(t, p, Strategy::DEqual);
  EXPECT_NEAR(d[0], 0.3, 1e-15);
  EXPECT_NEAR(d[1], 0.3, 1e-15);
  EXPECT_EQ(d[2], -0.1);
  // strategy d preserves the total: 0.5 = 0.5
  EXPECT_NEAR(sum(d), 0.5, 1e-15);
  EXPECT_NEAR(sum(t), 0.5, 1e-15);
}

TEST(Conservation, SumAndEqualPreserveTotals) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_partition(rng, 1 + rng() % 80);
    const auto r = random_scores(rng, p.sequence_length());
    const double s = sum(r);
    EXPECT_LE(std::abs(sum(aggregate(r, p, Strategy::ASum)) - s), 1e-12 * std::max(1.0, std::abs(s)));
    const auto t = random_scores(rng, p.size());
    const double st = sum(t);
    EXPECT_LE(std::abs(sum(disaggregate(t, p, Strategy::DEqual)) - st), 1e-12 * std::max(1.0, std::abs(st)));
  }
}

TEST(Conservation, MeanAndPassedOnDoNotConserve) {
  const auto p = TokenPartition::from_sizes({2, 1});
  EXPECT_NE(sum(aggregate(std::vector<double>{0.2, 0.4, -0.1}, p, Strategy::BMean)), 0.5);
  EXPECT_NE(sum(disaggregate(std::vector<double>{0.6, -0.1}, p, Strategy::CPassedOn)), 0.5);
}

TEST(RoundTrip, DisaggregateThenAggregate) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_partition(rng, 1 + rng() % 80);
    const auto t = random_scores(rng, p.size());
    const auto ad = aggregate(disaggregate(t, p, Strategy::DEqual), p, Strategy::ASum);
    const auto bc = aggregate(disaggregate(t, p, Strategy::CPassedOn), p, Strategy::BMean);
    for (std::size_t j = 0; j < t.size(); ++j) {
      EXPECT_NEAR(ad[j], t[j], 1e-12 * std::max(1.0, std::abs(t[j])));
      EXPECT_NEAR(bc[j], t[j], 1e-12 * std::max(1.0, std::abs(t[j])));
    }
  }
}

TEST(MapWrappers, CarryPartitionAndTags) {
  auto tok = strip_special_renormalize(token_map({5.0, -0.4, 0.2, 3.0}, {2, 1}));
  const auto nuc = disaggregate(tok, Strategy::DEqual);
  EXPECT_EQ(nuc.granularity, lrp::Granularity::Nucleotide);
  EXPECT_EQ(nuc.scores.size(), 3u);
  EXPECT_EQ(nuc.strategy, "d_equal");
  // max |score| dropped to 0.5 in the two-letter cell, so the map is no longer renormalized
  EXPECT_EQ(nuc.normalization, lrp::Normalization::Raw);
  EXPECT_NO_THROW(nuc.validate());
  const auto nuc_c = disaggregate(tok, Strategy::CPassedOn);
  EXPECT_EQ(nuc_c.normalization, lrp::Normalization::Renormalized);

  const auto back = aggregate(nuc, *tok.partition, Strategy::ASum);
  EXPECT_EQ(back.granularity, lrp::Granularity::Token);
  EXPECT_EQ(back.partition, tok.partition);
  EXPECT_NEAR(back.scores[0], -1.0, 1e-15);
  EXPECT_NO_THROW(back.validate());

  EXPECT_THROW(disaggregate(token_map({1.0, 0.0, 1.0}, {1}), Strategy::DEqual), std::invalid_argument);
  EXPECT_THROW(aggregate(tok, *tok.partition, Strategy::ASum), std::invalid_argument);
}
