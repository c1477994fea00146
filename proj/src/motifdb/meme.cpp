#include <charconv>
#include <cmath>
#include <optional>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "seqlrp/error.hpp"
#include "seqlrp/motifdb/motifdb.hpp"

namespace seqlrp::motifdb {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

std::vector<std::string_view> fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

double parse_number(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParseError("not a number: '" + std::string(s) + "'", line);
  return v;
}

/// Value of `key=` in a "letter-probability matrix:" line, tolerating
/// "key= v" and "key=v".
std::optional<std::string_view> keyed(const std::vector<std::string_view>& f, std::string_view key) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] == key && i + 1 < f.size()) return f[i + 1];
    if (starts_with(f[i], key) && f[i].size() > key.size()) return f[i].substr(key.size());
  }
  return std::nullopt;
}

}  // namespace

MotifDatabase parse_meme(std::string_view text) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos <= text.size();) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    lines.push_back(text.substr(pos, end - pos));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }

  MotifDatabase db;
  bool header = false;
  std::size_t i = 0;
  for (; i < lines.size(); ++i) {
    const auto t = trim(lines[i]);
    if (t.empty()) continue;
    if (!starts_with(t, "MEME version")) throw ParseError("expected 'MEME version' header", i + 1);
    header = true;
    ++i;
    break;
  }
  if (!header) throw ParseError("empty motif file", 1);

  std::string current;
  bool have_motif = false;
  bool have_matrix = true;
  std::size_t motif_line = 0;
  for (; i < lines.size(); ++i) {
    const std::size_t ln = i + 1;
    const auto t = trim(lines[i]);
    if (t.empty()) continue;
    if (starts_with(t, "ALPHABET")) {
      auto v = trim(t.substr(t.find('=') == std::string_view::npos ? t.size() : t.find('=') + 1));
      if (v != "ACGT") throw ParseError("unsupported alphabet '" + std::string(v) + "'", ln);
      continue;
    }
    if (starts_with(t, "MOTIF")) {
      if (have_motif && !have_matrix) throw ParseError("motif '" + current + "' has no probability matrix", motif_line);
      const auto f = fields(t);
      if (f.size() < 2) throw ParseError("MOTIF line without an identifier", ln);
      current = std::string(f[1]);
      have_motif = true;
      have_matrix = false;
      motif_line = ln;
      continue;
    }
    if (starts_with(t, "letter-probability matrix")) {
      if (!have_motif) throw ParseError("probability matrix before any MOTIF line", ln);
      if (have_matrix) throw ParseError("second probability matrix for motif '" + current + "'", ln);
      const auto f = fields(t);
      const auto w_text = keyed(f, "w=");
      if (!w_text) throw ParseError("matrix header lacks 'w='", ln);
      const double wd = parse_number(*w_text, ln);
      if (wd < 1 || wd != std::floor(wd)) throw ParseError("invalid motif width", ln);
      if (auto a = keyed(f, "alength="); a && parse_number(*a, ln) != 4.0)
        throw ParseError("alength must be 4", ln);
      const auto w = static_cast<std::size_t>(wd);
      Pwm pwm{current, {}, 0};
      std::size_t j = i + 1;
      while (pwm.columns.size() < w) {
        if (j >= lines.size()) throw ParseError("matrix ends after " + std::to_string(pwm.columns.size()) + " rows", j);
        const auto row = trim(lines[j]);
        ++j;
        if (row.empty()) continue;
        const auto nums = fields(row);
        if (nums.size() != 4) throw ParseError("expected 4 probabilities per row", j);
        Column col{};
        double sum = 0.0;
        for (std::size_t b = 0; b < 4; ++b) {
          col[b] = parse_number(nums[b], j);
          if (col[b] < 0.0) throw ParseError("negative probability", j);
          sum += col[b];
        }
        if (std::abs(sum - 1.0) > 1e-2) throw ParseError("row does not sum to 1", j);
        for (auto& v : col) v /= sum;
        pwm.columns.push_back(col);
      }
      db.motifs.push_back(std::move(pwm));
      have_matrix = true;
      i = j - 1;
      continue;
    }
    // Other header fields (strands, background, URL, nsites lines) are ignored.
    const auto first = fields(t).front();
    double dummy = 0.0;
    if (std::from_chars(first.data(), first.data() + first.size(), dummy).ec == std::errc{} && have_motif &&
        have_matrix)
      throw ParseError("unexpected matrix row", ln);
  }
  if (have_motif && !have_matrix) throw ParseError("motif '" + current + "' has no probability matrix", motif_line);
  if (db.motifs.empty()) throw ParseError("no motifs found", lines.size());
  return db;
}

MotifDatabase load_meme(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open motif file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_meme(ss.str());
}

std::string to_meme(std::span<const Pwm> motifs) {
  std::string out =
      "MEME version 4\n\nALPHABET= ACGT\n\nstrands: + -\n\nBackground letter frequencies\n"
      "A 0.25 C 0.25 G 0.25 T 0.25\n";
  char buf[128];
  for (const auto& m : motifs) {
    out += "\nMOTIF " + m.id + "\n";
    std::snprintf(buf, sizeof buf, "letter-probability matrix: alength= 4 w= %zu nsites= %zu E= 0\n", m.width(),
                  m.support);
    out += buf;
    for (const auto& c : m.columns) {
      std::snprintf(buf, sizeof buf, " %.6f %.6f %.6f %.6f\n", c[0], c[1], c[2], c[3]);
      out += buf;
    }
  }
  return out;
}

}  // namespace seqlrp::motifdb
