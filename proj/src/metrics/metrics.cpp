#include "seqlrp/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

#include "seqlrp/error.hpp"

namespace seqlrp::metrics {

namespace {

double sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

double continuous_jaccard(std::span<const double> v, std::span<const double> w) {
  if (v.size() != w.size()) throw ShapeError("continuous_jaccard: length mismatch");
  if (v.empty()) throw std::invalid_argument("continuous_jaccard: empty vectors");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    const double b = std::abs(w[i]);
    num += sign(v[i]) * sign(w[i]) * std::min(a, b);
    den += std::max(a, b);
  }
  return den == 0.0 ? 0.0 : num / den;
}

double gini_index(std::span<const double> r) {
  if (r.empty()) throw std::invalid_argument("gini_index: empty input");
  std::vector<double> a(r.size());
  std::transform(r.begin(), r.end(), a.begin(), [](double x) { return std::abs(x); });
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  const double total = std::accumulate(a.begin(), a.end(), 0.0);
  if (total == 0.0) return 0.0;
  // sum_i sum_j |a_i - a_j| = 2 sum_i (2i - n + 1) a_(i) over ascending order
  double pair_sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) pair_sum += (2.0 * static_cast<double>(i) - n + 1.0) * a[i];
  pair_sum *= 2.0;
  const double mean = total / n;
  return pair_sum / (2.0 * n * n * mean);
}

double shannon_entropy(std::span<const double> r) {
  if (r.empty()) throw std::invalid_argument("shannon_entropy: empty input");
  double total = 0.0;
  for (double x : r) total += std::abs(x);
  if (total == 0.0) throw std::invalid_argument("shannon_entropy: all-zero scores define no distribution");
  double h = 0.0;
  for (double x : r) {
    const double p = std::abs(x) / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

MeanSd mean_sd(std::span<const double> values) {
  MeanSd out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / (n - 1.0));
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string_view to_string(Order o) { return o == Order::MIF ? "MIF" : "LIF"; }

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::Unknown: return "unknown";
    case Scheme::Random: return "random";
    case Scheme::Complement: return "complement";
  }
  return "?";
}

Order order_from_string(std::string_view s) {
  if (s == "MIF" || s == "mif") return Order::MIF;
  if (s == "LIF" || s == "lif") return Order::LIF;
  throw std::invalid_argument("unknown order '" + std::string(s) + "'");
}

Scheme scheme_from_string(std::string_view s) {
  if (s == "unknown") return Scheme::Unknown;
  if (s == "random") return Scheme::Random;
  if (s == "complement") return Scheme::Complement;
  throw std::invalid_argument("unknown scheme '" + std::string(s) + "'");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<std::size_t> select_units(std::span<const double> scores, const seqdata::TokenPartition& units,
                                      Order order, double k, bool absolute) {
  if (scores.size() != units.size()) throw ShapeError("select_units: one score per unit required");
  if (!(k > 0.0 && k <= 100.0)) throw std::invalid_argument("select_units: k must lie in (0, 100]");
  std::vector<std::size_t> rank(scores.size());
  std::iota(rank.begin(), rank.end(), 0);
  auto key = [&](std::size_t j) { return absolute ? std::abs(scores[j]) : scores[j]; };
  std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
    return order == Order::MIF ? key(a) > key(b) : key(a) < key(b);
  });
  const double l = static_cast<double>(units.sequence_length());
  const auto budget = static_cast<std::size_t>(std::ceil(k * l / 100.0 - 1e-9));
  std::vector<std::size_t> chosen;
  std::size_t covered = 0;
  for (std::size_t j : rank) {
    if (covered >= budget) break;
    chosen.push_back(j);
    covered += units[j].length;
  }
  return chosen;
}

std::vector<double> faithfulness_deltas(const models::SequenceClassifier& model, const seqdata::DnaSequence& seq,
                                        std::span<const double> unit_scores, int target,
                                        const FaithfulnessOptions& opts, std::size_t sample_index) {
  const seqdata::TokenPartition units = model.units(seq);
  if (unit_scores.size() != units.size())
    throw ShapeError("faithfulness: " + std::to_string(unit_scores.size()) + " scores for " +
                     std::to_string(units.size()) + " units");
  for (std::size_t i = 1; i < opts.ks.size(); ++i)
    if (!(opts.ks[i] > opts.ks[i - 1])) throw std::invalid_argument("faithfulness: ks must be strictly increasing");

  // One replacement letter per position, shared by every k and both orders.
  std::string replacement = seq.str();
  if (opts.scheme == Scheme::Random) {
    std::mt19937_64 rng(derive_seed(opts.seed, sample_index));
    for (std::size_t i = 0; i < replacement.size(); ++i) {
      const int orig = seqdata::channel_of(seq[i]);
      if (orig < 0) {
        replacement[i] = seqdata::letter_of(static_cast<int>(rng() % 4));
      } else {
        const int step = 1 + static_cast<int>(rng() % 3);  // never the original letter
        replacement[i] = seqdata::letter_of((orig + step) % 4);
      }
    }
  } else if (opts.scheme == Scheme::Complement) {
    replacement = seqdata::complement(seq).str();
  }

  const double base = model.probability(seq, target);
  std::vector<double> deltas;
  deltas.reserve(opts.ks.size());
  for (double k : opts.ks) {
    const auto chosen = select_units(unit_scores, units, opts.order, k, opts.absolute);
    double perturbed = 0.0;
    if (opts.scheme == Scheme::Unknown) {
      perturbed = model.probability_unknown(seq, chosen, target);
    } else {
      std::string s = seq.str();
      for (std::size_t j : chosen)
        for (std::size_t i = units[j].start; i < units[j].end(); ++i) s[i] = replacement[i];
      perturbed = model.probability(seqdata::DnaSequence(std::move(s)), target);
    }
    deltas.push_back(base - perturbed);
  }
  return deltas;
}

FaithfulnessCurve faithfulness_curve(const models::SequenceClassifier& model,
                                     std::span<const seqdata::Sample> samples,
                                     std::span<const lrp::RelevanceMap> maps, const FaithfulnessOptions& opts) {
  if (samples.size() != maps.size()) throw ShapeError("faithfulness_curve: one map per sample required");
  const auto expected = model.family() == "glm" ? lrp::Granularity::Token : lrp::Granularity::Nucleotide;
  FaithfulnessCurve curve{opts.order, opts.scheme, {}, samples.size()};
  std::vector<std::vector<double>> per_k(opts.ks.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (maps[i].granularity != expected)
      throw std::invalid_argument("faithfulness_curve: map granularity does not match the model family");
    if (maps[i].has_specials()) throw std::invalid_argument("faithfulness_curve: strip [CLS]/[SEP] first");
    const auto d = faithfulness_deltas(model, samples[i].sequence, maps[i].scores, maps[i].target, opts, i);
    for (std::size_t k = 0; k < d.size(); ++k) per_k[k].push_back(d[k]);
  }
  for (std::size_t k = 0; k < opts.ks.size(); ++k) {
    const auto ms = mean_sd(per_k[k]);
    curve.points.push_back({opts.ks[k], ms.mean, ms.sd});
  }
  return curve;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string metrics_tsv(std::span<const MetricRow> rows) {
  std::string out = "model\tmetric\tgranularity\tstrategy\tvalue\tsd\n";
  for (const auto& r : rows)
    out += r.model + '\t' + r.metric + '\t' + r.granularity + '\t' + r.strategy + '\t' + fmt(r.value) + '\t' +
           fmt(r.sd) + '\n';
  return out;
}

std::string curves_tsv(std::string_view model, std::span<const FaithfulnessCurve> curves) {
  std::string out = "model\torder\tscheme\tk\tdelta\tsd\tsamples\n";
  for (const auto& c : curves)
    for (const auto& p : c.points)
      out += std::string(model) + '\t' + std::string(to_string(c.order)) + '\t' + std::string(to_string(c.scheme)) +
             '\t' + fmt(p.k) + '\t' + fmt(p.delta) + '\t' + fmt(p.sd) + '\t' + std::to_string(c.samples) + '\n';
  return out;
}

}  // namespace seqlrp::metrics
