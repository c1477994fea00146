#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "seqlrp/error.hpp"
#include "seqlrp/motifdb/motifdb.hpp"
#include "seqlrp/seqdata/sequence.hpp"

namespace seqlrp::motifdb {

void Pwm::validate() const {
  if (columns.empty()) throw std::invalid_argument("pwm '" + id + "' has no columns");
  for (std::size_t c = 0; c < columns.size(); ++c) {
    double s = 0.0;
    for (double f : columns[c]) {
      if (!(f >= 0.0) || !std::isfinite(f))
        throw std::invalid_argument("pwm '" + id + "' column " + std::to_string(c) + " has a negative entry");
      s += f;
    }
    if (std::abs(s - 1.0) > 1e-9)
      throw std::invalid_argument("pwm '" + id + "' column " + std::to_string(c) + " does not sum to 1");
  }
}

Pwm one_hot_pwm(std::string_view letters, std::string id) {
  Pwm p{std::move(id), {}, 1};
  for (char c : letters) {
    const int ch = seqdata::channel_of(c);
    Column col{0.25, 0.25, 0.25, 0.25};
    if (ch >= 0) {
      col = {0, 0, 0, 0};
      col[static_cast<std::size_t>(ch)] = 1.0;
    }
    p.columns.push_back(col);
  }
  return p;
}

Pwm reverse_complement(const Pwm& pwm) {
  Pwm out = pwm;
  std::reverse(out.columns.begin(), out.columns.end());
  for (auto& c : out.columns) std::reverse(c.begin(), c.end());  // A<->T, C<->G
  return out;
}

std::vector<double> info_content(const Pwm& pwm) {
  std::vector<double> ic;
  ic.reserve(pwm.width());
  for (const auto& col : pwm.columns) {
    double h = 2.0;
    for (double f : col)
      if (f > 0.0) h += f * std::log2(f);
    ic.push_back(std::clamp(h, 0.0, 2.0));
  }
  return ic;
}

Weighted weighted_one_hot(const Seqlet& s) {
  Weighted w(s.letters.size(), Column{0, 0, 0, 0});
  for (std::size_t i = 0; i < s.letters.size(); ++i) {
    const int ch = seqdata::channel_of(s.letters[i]);
    if (ch >= 0) w[i][static_cast<std::size_t>(ch)] = s.scores[i];
  }
  return w;
}

namespace {

Weighted reversed(const Weighted& w) {
  Weighted out(w.rbegin(), w.rend());
  for (auto& c : out) std::reverse(c.begin(), c.end());
  return out;
}

double norm(const Weighted& w) {
  double s = 0.0;
  for (const auto& c : w)
    for (double v : c) s += v * v;
  return std::sqrt(s);
}

/// Offsets 0, -1, 1, -2, 2, ... within [lo, hi], so ties favor small shifts.
std::vector<long> offsets_outward(long lo, long hi) {
  std::vector<long> out;
  for (long d = 0; d <= std::max(-lo, hi); ++d) {
    if (d == 0) {
      if (lo <= 0 && 0 <= hi) out.push_back(0);
      continue;
    }
    if (-d >= lo) out.push_back(-d);
    if (d <= hi) out.push_back(d);
  }
  return out;
}

}  // namespace

Alignment best_alignment(const Weighted& centroid, const Weighted& member, std::size_t min_overlap) {
  Alignment best{-2.0, 0, false};
  const double nc = norm(centroid);
  const double nm = norm(member);
  const auto wc = static_cast<long>(centroid.size());
  const auto wm = static_cast<long>(member.size());
  const long ov = static_cast<long>(std::min<std::size_t>(min_overlap, std::min(centroid.size(), member.size())));
  const auto offsets = offsets_outward(-(wm - ov), wc - ov);
  for (bool rev : {false, true}) {
    const Weighted m = rev ? reversed(member) : member;
    for (long o : offsets) {
      double dot = 0.0;
      for (long j = std::max(0L, -o); j < wm && j + o < wc; ++j)
        for (std::size_t b = 0; b < 4; ++b)
          dot += centroid[static_cast<std::size_t>(j + o)][b] * m[static_cast<std::size_t>(j)][b];
      const double score = (nc == 0.0 || nm == 0.0) ? 0.0 : dot / (nc * nm);
      if (score > best.score) best = {score, o, rev};
    }
  }
  return best;
}

std::vector<Cluster> build_pwms(std::span<const Seqlet> seqlets, const ClusterConfig& cfg) {
  if (seqlets.empty()) throw std::invalid_argument("build_pwms: no seqlets");
  struct Work {
    Weighted centroid;
    std::vector<ClusterMember> members;
  };
  std::vector<Work> clusters;
  for (std::size_t i = 0; i < seqlets.size(); ++i) {
    const auto& s = seqlets[i];
    if (s.scores.size() != s.letters.size() || s.letters.empty())
      throw ShapeError("build_pwms: seqlet scores and letters differ in length");
    const Weighted w = weighted_one_hot(s);
    const auto min_ov = static_cast<std::size_t>(std::ceil(cfg.min_overlap * static_cast<double>(w.size())));
    bool joined = false;
    for (auto& c : clusters) {
      const Alignment a = best_alignment(c.centroid, w, std::max<std::size_t>(1, min_ov));
      if (a.score > cfg.similarity) {
        const Weighted m = a.reverse ? reversed(w) : w;
        for (std::size_t j = 0; j < m.size(); ++j) {
          const long pos = static_cast<long>(j) + a.offset;
          if (pos < 0 || pos >= static_cast<long>(c.centroid.size())) continue;
          for (std::size_t b = 0; b < 4; ++b) c.centroid[static_cast<std::size_t>(pos)][b] += m[j][b];
        }
        c.members.push_back({i, a.offset, a.reverse});
        joined = true;
        break;
      }
    }
    if (!joined) clusters.push_back({w, {{i, 0, false}}});
  }

  std::vector<Cluster> out;
  for (const auto& c : clusters) {
    const std::size_t width = c.centroid.size();
    std::vector<Column> counts(width, Column{0, 0, 0, 0});
    for (const auto& mem : c.members) {
      const auto& s = seqlets[mem.seqlet];
      const std::size_t w = s.letters.size();
      for (std::size_t j = 0; j < w; ++j) {
        const std::size_t src = mem.reverse ? w - 1 - j : j;
        int ch = seqdata::channel_of(s.letters[src]);
        if (ch < 0) continue;
        if (mem.reverse) ch = 3 - ch;
        const long pos = static_cast<long>(j) + mem.offset;
        if (pos < 0 || pos >= static_cast<long>(width)) continue;
        counts[static_cast<std::size_t>(pos)][static_cast<std::size_t>(ch)] += std::abs(s.scores[src]);
      }
    }
    Pwm pwm{"", {}, c.members.size()};
    for (const auto& col : counts) {
      const double total = col[0] + col[1] + col[2] + col[3];
      if (total == 0.0) {
        pwm.columns.push_back({0.25, 0.25, 0.25, 0.25});
      } else {
        pwm.columns.push_back({col[0] / total, col[1] / total, col[2] / total, col[3] / total});
      }
    }
    const auto ic = info_content(pwm);
    std::size_t lo = 0;
    std::size_t hi = ic.size();
    while (lo < hi && ic[lo] < cfg.trim_ic) ++lo;
    while (hi > lo && ic[hi - 1] < cfg.trim_ic) --hi;
    Cluster cl;
    if (lo < hi) {
      pwm.columns = std::vector<Column>(pwm.columns.begin() + static_cast<long>(lo),
                                        pwm.columns.begin() + static_cast<long>(hi));
      cl.trimmed_left = lo;
    }
    cl.pwm = std::move(pwm);
    cl.members = c.members;
    out.push_back(std::move(cl));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Cluster& a, const Cluster& b) { return a.pwm.support > b.pwm.support; });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].pwm.id = "motif_" + std::to_string(i + 1);
  return out;
}

}  // namespace seqlrp::motifdb
