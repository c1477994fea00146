#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "seqlrp/error.hpp"
#include "seqlrp/motifdb/motifdb.hpp"

namespace seqlrp::motifdb {

namespace {

struct Window {
  std::size_t sample;
  std::size_t start;
  double score;
};

}  // namespace

SeqletReport extract_seqlets(std::span<const lrp::RelevanceMap> maps, std::span<const seqdata::Sample> samples,
                             const SeqletConfig& cfg) {
  if (maps.size() != samples.size()) throw ShapeError("extract_seqlets: one map per sample required");
  if (cfg.window == 0) throw std::invalid_argument("extract_seqlets: window must be positive");
  if (!(cfg.percentile >= 0.0 && cfg.percentile <= 100.0))
    throw std::invalid_argument("extract_seqlets: percentile must lie in [0, 100]");

  SeqletReport report;
  std::vector<std::vector<double>> scores(maps.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto& m = maps[i];
    if (m.granularity != lrp::Granularity::Nucleotide)
      throw std::invalid_argument("extract_seqlets: nucleotide-level maps required");
    if (m.scores.size() != samples[i].sequence.length())
      throw ShapeError("extract_seqlets: map length differs from sequence length for '" + samples[i].id + "'");
    const std::size_t l = m.scores.size();
    if (cfg.window > l) {
      report.skipped.push_back(samples[i].id);
      continue;
    }
    std::vector<double> contrib(l);
    for (std::size_t p = 0; p < l; ++p)
      contrib[p] = cfg.absolute ? std::abs(m.scores[p]) : std::max(0.0, m.scores[p]);
    auto& s = scores[i];
    s.resize(l - cfg.window + 1);
    for (std::size_t start = 0; start < s.size(); ++start) {
      double w = 0.0;
      for (std::size_t p = start; p < start + cfg.window; ++p) w += contrib[p];
      s[start] = w;
      sum += w;
      sum_sq += w * w;
      ++count;
    }
  }
  if (count == 0) return report;

  const double n = static_cast<double>(count);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  report.global_threshold = mean + cfg.sd_factor * std::sqrt(var);

  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto& s = scores[i];
    if (s.empty()) continue;
    std::vector<double> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(cfg.percentile / 100.0 * static_cast<double>(sorted.size())));
    const double pct = sorted[rank == 0 ? 0 : rank - 1];
    const double threshold = std::max(pct, report.global_threshold);
    // Rounding in the mean must not let a flat track pass its own threshold.
    const double margin = 1e-12 * std::max(1.0, std::abs(threshold));

    std::vector<Window> candidates;
    for (std::size_t start = 0; start < s.size(); ++start)
      if (s[start] > threshold + margin) candidates.push_back({i, start, s[start]});
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Window& a, const Window& b) { return a.score > b.score; });
    std::vector<Window> kept;
    for (const auto& c : candidates) {
      const bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const Window& k) {
        return c.start < k.start + cfg.window && k.start < c.start + cfg.window;
      });
      if (!overlaps) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end(), [](const Window& a, const Window& b) { return a.start < b.start; });
    for (const auto& k : kept) {
      Seqlet sl;
      sl.sample_id = samples[i].id;
      sl.start = k.start;
      sl.end = k.start + cfg.window - 1;
      sl.scores.assign(maps[i].scores.begin() + static_cast<long>(k.start),
                       maps[i].scores.begin() + static_cast<long>(k.start + cfg.window));
      sl.letters = samples[i].sequence.str().substr(k.start, cfg.window);
      report.seqlets.push_back(std::move(sl));
    }
  }
  return report;
}

}  // namespace seqlrp::motifdb
