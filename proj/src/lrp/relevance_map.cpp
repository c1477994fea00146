#include "seqlrp/lrp/relevance_map.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "seqlrp/error.hpp"

namespace seqlrp::lrp {

std::string_view to_string(Granularity g) { return g == Granularity::Token ? "token" : "nucleotide"; }

std::string_view to_string(Normalization n) { return n == Normalization::Raw ? "raw" : "renormalized"; }

Granularity granularity_from_string(std::string_view s) {
  if (s == "token") return Granularity::Token;
  if (s == "nucleotide") return Granularity::Nucleotide;
  throw std::invalid_argument("unknown granularity '" + std::string(s) + "'");
}

bool RelevanceMap::has_specials() const noexcept {
  for (bool b : special)
    if (b) return true;
  return false;
}

void RelevanceMap::validate() const {
  for (double v : scores)
    if (!std::isfinite(v)) throw std::invalid_argument("RelevanceMap: non-finite score");
  if (!special.empty() && special.size() != scores.size())
    throw std::invalid_argument("RelevanceMap: one special flag per score required");
  if (partition) {
    const std::size_t expected = granularity == Granularity::Token
                                     ? partition->size() + (has_specials() ? 2 : 0)
                                     : partition->sequence_length();
    if (scores.size() != expected) throw std::invalid_argument("RelevanceMap: score count does not match partition");
  }
  if (normalization == Normalization::Renormalized) {
    double mx = 0.0;
    for (double v : scores) mx = std::max(mx, std::abs(v));
    if (mx != 0.0 && std::abs(mx - 1.0) > 1e-12)
      throw std::invalid_argument("RelevanceMap: renormalized map must have max |score| = 1");
  }
}

nlohmann::json to_json(const RelevanceMap& map) {
  nlohmann::json j;
  j["id"] = map.sample_id;
  j["model"] = map.model;
  j["strategy"] = map.strategy;
  j["granularity"] = to_string(map.granularity);
  j["target"] = map.target;
  j["normalization"] = to_string(map.normalization);
  j["scores"] = map.scores;
  nlohmann::json cells = nlohmann::json::array();
  if (map.partition)
    for (const auto& c : map.partition->cells()) cells.push_back({c.start, c.length});
  j["partition"] = cells;
  j["special"] = map.special;
  return j;
}

RelevanceMap relevance_map_from_json(const nlohmann::json& j) {
  RelevanceMap m;
  m.sample_id = j.at("id").get<std::string>();
  m.model = j.value("model", "");
  m.strategy = j.value("strategy", "");
  m.granularity = granularity_from_string(j.at("granularity").get<std::string>());
  m.target = j.at("target").get<int>();
  const auto norm = j.at("normalization").get<std::string>();
  if (norm == "raw") {
    m.normalization = Normalization::Raw;
  } else if (norm == "renormalized") {
    m.normalization = Normalization::Renormalized;
  } else {
    throw std::invalid_argument("unknown normalization '" + norm + "'");
  }
  m.scores = j.at("scores").get<std::vector<double>>();
  const auto& cells = j.at("partition");
  if (!cells.empty()) {
    std::vector<seqdata::TokenCell> tc;
    for (const auto& c : cells) tc.push_back({c.at(0).get<std::size_t>(), c.at(1).get<std::size_t>()});
    m.partition = seqdata::TokenPartition(std::move(tc));
  }
  m.special = j.at("special").get<std::vector<bool>>();
  m.validate();
  return m;
}

void save_relevance_maps(const std::filesystem::path& path, const std::vector<RelevanceMap>& maps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& m : maps) out << to_json(m).dump() << '\n';
}

std::vector<RelevanceMap> load_relevance_maps(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<RelevanceMap> maps;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      maps.push_back(relevance_map_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), lineno);
    }
  }
  return maps;
}

}  // namespace seqlrp::lrp
