#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "seqlrp/error.hpp"
#include "seqlrp/motifdb/motifdb.hpp"
#include "seqlrp/seqdata/sequence.hpp"

namespace seqlrp::motifdb {

namespace {

constexpr double kColumnWidth = 20.0;
constexpr double kUnitHeight = 50.0;  // pixels per bit, or per unit relevance
constexpr double kMargin = 10.0;
constexpr double kFontSize = 20.0;
// Cap height of the glyph font relative to its size; used to scale a glyph
// to an exact pixel height.
constexpr double kCapHeight = 0.72;

const char* color_of(char letter) {
  switch (letter) {
    case 'A': return "#109648";
    case 'C': return "#255c99";
    case 'G': return "#f7b32b";
    case 'T': return "#d62839";
    default: return "#808080";
  }
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

/// Glyph whose visible body spans [baseline - height, baseline] (height >= 0),
/// or [baseline, baseline + height] when `below`.
std::string glyph(char letter, double x, double baseline, double height, bool below) {
  const double sy = height * kUnitHeight / (kFontSize * kCapHeight);
  const double sx = kColumnWidth / (kFontSize * 0.62);
  const double y = below ? baseline + height * kUnitHeight : baseline;
  std::string out = "<text class=\"glyph\" data-letter=\"";
  out += letter;
  out += "\" data-height=\"" + num(height) + "\" transform=\"translate(" + num(x) + "," + num(y) + ") scale(" +
         num(sx) + "," + num(sy) + ")\" fill=\"" + color_of(letter) + "\" font-family=\"monospace\" font-size=\"" +
         num(kFontSize) + "\">";
  out += letter;
  out += "</text>\n";
  return out;
}

std::string header(double width, double height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
}

}  // namespace

std::string render_logo(const Pwm& pwm) {
  pwm.validate();
  const auto ic = info_content(pwm);
  const double top = 2.0 * kUnitHeight;
  const double width = 2 * kMargin + kColumnWidth * static_cast<double>(pwm.width());
  const double baseline = kMargin + top;
  std::string svg = header(width, baseline + kMargin);
  svg += "<line class=\"baseline\" x1=\"" + num(kMargin) + "\" y1=\"" + num(baseline) + "\" x2=\"" +
         num(width - kMargin) + "\" y2=\"" + num(baseline) + "\" stroke=\"#000000\" stroke-width=\"0.5\"/>\n";
  for (std::size_t p = 0; p < pwm.width(); ++p) {
    const double x = kMargin + kColumnWidth * static_cast<double>(p);
    svg += "<g class=\"column\" data-position=\"" + std::to_string(p) + "\" data-ic=\"" + num(ic[p]) + "\">\n";
    // Smallest letters at the bottom; ties keep A, C, G, T order.
    std::array<std::size_t, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pwm.columns[p][a] < pwm.columns[p][b]; });
    double y = baseline;
    for (std::size_t b : order) {
      const double h = pwm.columns[p][b] * ic[p];
      if (h <= 0.0) continue;
      svg += glyph(seqdata::letter_of(static_cast<int>(b)), x, y, h, false);
      y -= h * kUnitHeight;
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string render_logo(const lrp::RelevanceMap& map, std::string_view letters) {
  if (map.granularity != lrp::Granularity::Nucleotide)
    throw std::invalid_argument("render_logo: nucleotide-level map required");
  if (map.scores.size() != letters.size()) throw ShapeError("render_logo: map and sequence lengths differ");
  double peak = 0.0;
  for (double r : map.scores) peak = std::max(peak, std::abs(r));
  const double half = std::max(1.0, peak) * kUnitHeight;
  const double width = 2 * kMargin + kColumnWidth * static_cast<double>(letters.size());
  const double baseline = kMargin + half;
  std::string svg = header(width, baseline + half + kMargin);
  svg += "<line class=\"baseline\" x1=\"" + num(kMargin) + "\" y1=\"" + num(baseline) + "\" x2=\"" +
         num(width - kMargin) + "\" y2=\"" + num(baseline) + "\" stroke=\"#000000\" stroke-width=\"0.5\"/>\n";
  for (std::size_t p = 0; p < letters.size(); ++p) {
    const double x = kMargin + kColumnWidth * static_cast<double>(p);
    const double r = map.scores[p];
    svg += "<g class=\"column\" data-position=\"" + std::to_string(p) + "\">\n";
    svg += glyph(letters[p], x, baseline, std::abs(r), r < 0.0);
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace seqlrp::motifdb
