#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>

#include "seqlrp/motifdb/motifdb.hpp"

namespace seqlrp::motifdb {

double column_pearson(const Column& a, const Column& b) {
  const double ma = (a[0] + a[1] + a[2] + a[3]) / 4.0;
  const double mb = (b[0] + b[1] + b[2] + b[3]) / 4.0;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  constexpr double flat = 1e-24;
  if (saa < flat && sbb < flat) return 1.0;
  if (saa < flat || sbb < flat) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

PairScore align_pwms(const Pwm& query, const Pwm& target, std::size_t min_overlap) {
  if (query.columns.empty() || target.columns.empty()) throw std::invalid_argument("align_pwms: empty PWM");
  const auto wq = static_cast<long>(query.width());
  const auto wt = static_cast<long>(target.width());
  const long shorter = std::min(wq, wt);
  const long ov = std::min(static_cast<long>(min_overlap), shorter);
  PairScore best{-2.0, 0, false};
  for (bool rev : {false, true}) {
    const Pwm q = rev ? reverse_complement(query) : query;
    for (long o = -(wq - ov); o <= wt - ov; ++o) {
      double s = 0.0;
      for (long j = std::max(0L, -o); j < wq && j + o < wt; ++j)
        s += column_pearson(q.columns[static_cast<std::size_t>(j)], target.columns[static_cast<std::size_t>(j + o)]);
      const double score = s / static_cast<double>(shorter);
      if (score > best.score) best = {score, o, rev};
    }
  }
  return best;
}

namespace {

Pwm null_query(const Pwm& q, NullModel model, std::mt19937_64& rng) {
  Pwm out = q;
  std::shuffle(out.columns.begin(), out.columns.end(), rng);
  if (model == NullModel::ColumnAndLetterShuffle)
    for (auto& c : out.columns) std::shuffle(c.begin(), c.end(), rng);
  return out;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::vector<MotifMatch> match_database(std::span<const Pwm> queries, const MotifDatabase& db, const MatchConfig& cfg) {
  if (cfg.nulls < 100) throw std::invalid_argument("match_database: at least 100 null queries required");
  if (db.motifs.empty()) throw std::invalid_argument("match_database: empty database");
  std::vector<MotifMatch> out;
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    const Pwm& q = queries[qi];
    q.validate();
    std::mt19937_64 rng(mix(cfg.seed, qi));
    std::vector<Pwm> nulls;
    nulls.reserve(cfg.nulls);
    for (std::size_t n = 0; n < cfg.nulls; ++n) nulls.push_back(null_query(q, cfg.null_model, rng));

    std::optional<MotifMatch> best;
    for (const auto& t : db.motifs) {
      const PairScore obs = align_pwms(q, t, cfg.min_overlap);
      std::size_t ge = 0;
      for (const auto& nq : nulls)
        if (align_pwms(nq, t, cfg.min_overlap).score >= obs.score) ++ge;
      MotifMatch m{q.id, t.id, obs.offset, obs.reverse, obs.score,
                   static_cast<double>(1 + ge) / static_cast<double>(1 + cfg.nulls)};
      if (!best || m.p_value < best->p_value || (m.p_value == best->p_value && m.score > best->score))
        best = std::move(m);
    }
    out.push_back(std::move(*best));
  }
  std::stable_sort(out.begin(), out.end(), [](const MotifMatch& a, const MotifMatch& b) {
    if (a.p_value != b.p_value) return a.p_value < b.p_value;
    return a.score > b.score;
  });
  return out;
}

std::string matches_tsv(std::span<const MotifMatch> matches) {
  std::string out = "query\ttarget\toffset\torientation\tscore\tp_value\n";
  char buf[96];
  for (const auto& m : matches) {
    std::snprintf(buf, sizeof buf, "\t%ld\t%s\t%.6f\t%.6g\n", m.offset, m.reverse ? "reverse-complement" : "forward",
                  m.score, m.p_value);
    out += m.query + '\t' + m.target + buf;
  }
  return out;
}

}  // namespace seqlrp::motifdb
