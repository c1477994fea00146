#include "seqlrp/seqdata/dataset.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "seqlrp/error.hpp"

namespace seqlrp::seqdata {

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
  return s.substr(b);
}

std::optional<int> parse_label(const std::string& s) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  return std::nullopt;
}

std::size_t parse_index(const std::string& s, std::size_t lineno) {
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad motif_start '" + s + "'", lineno);
  }
}

LabeledDataset parse_csv(std::string_view text) {
  LabeledDataset data;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip(line);
    if (line.empty()) continue;
    auto fields = split_commas(line);
    for (auto& f : fields) f = strip(f);
    if (first) {
      first = false;
      if (fields.size() >= 2 && !parse_label(fields[1])) continue;  // header row
    }
    if (fields.size() < 2 || fields.size() > 3) throw ParseError("expected sequence,label[,motif_start]", lineno);
    if (fields[0].empty()) throw ParseError("empty sequence", lineno);
    auto label = parse_label(fields[1]);
    if (!label) throw ParseError("label must be 0 or 1, got '" + fields[1] + "'", lineno);
    Sample s{"s" + std::to_string(data.samples.size()), DnaSequence::normalized(fields[0]), *label, std::nullopt};
    if (fields.size() == 3 && !fields[2].empty()) s.motif_start = parse_index(fields[2], lineno);
    data.samples.push_back(std::move(s));
  }
  return data;
}

LabeledDataset parse_fasta(std::string_view text) {
  LabeledDataset data;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  std::size_t header_line = 0;
  std::optional<Sample> pending;
  std::string letters;

  auto flush = [&]() {
    if (!pending) return;
    if (letters.empty()) throw ParseError("record '" + pending->id + "' has no sequence", header_line);
    pending->sequence = DnaSequence::normalized(letters);
    data.samples.push_back(std::move(*pending));
    pending.reset();
    letters.clear();
  };

  while (std::getline(in, line)) {
    ++lineno;
    line = strip(line);
    if (line.empty()) continue;
    if (line.front() == '>') {
      flush();
      header_line = lineno;
      std::istringstream hs(line.substr(1));
      std::string word;
      Sample s{"", DnaSequence("N"), 0, std::nullopt};
      hs >> s.id;
      if (s.id.empty()) throw ParseError("FASTA header without an id", lineno);
      while (hs >> word) {
        if (word.rfind("label=", 0) == 0) {
          auto label = parse_label(word.substr(6));
          if (!label) throw ParseError("label must be 0 or 1", lineno);
          s.label = *label;
        } else if (word.rfind("motif_start=", 0) == 0) {
          s.motif_start = parse_index(word.substr(12), lineno);
        }
      }
      pending = std::move(s);
    } else {
      if (!pending) throw ParseError("sequence data before the first '>' header", lineno);
      letters += line;
    }
  }
  flush();
  return data;
}

}  // namespace

DatasetFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".fa" || ext == ".fasta" || ext == ".fna") return DatasetFormat::Fasta;
  return DatasetFormat::Csv;
}

LabeledDataset parse_dataset(std::string_view text, DatasetFormat format) {
  LabeledDataset data = format == DatasetFormat::Csv ? parse_csv(text) : parse_fasta(text);
  if (data.samples.empty()) throw ParseError("dataset contains no records");
  return data;
}

LabeledDataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read dataset " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_dataset(ss.str(), format);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

LabeledDataset load_dataset(const std::filesystem::path& path) { return load_dataset(path, format_from_path(path)); }

std::string to_csv(const LabeledDataset& data) {
  std::string out = "sequence,label,motif_start\n";
  for (const auto& s : data.samples) {
    out += s.sequence.str();
    out += ',';
    out += std::to_string(s.label);
    out += ',';
    if (s.motif_start) out += std::to_string(*s.motif_start);
    out += '\n';
  }
  return out;
}

void save_csv(const LabeledDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset " + path.string());
  out << to_csv(data);
}

namespace {

char uniform_letter(std::mt19937_64& rng) { return letter_of(static_cast<int>(rng() >> 62)); }

char sample_letter(std::mt19937_64& rng, const std::array<double, 4>& col) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  for (int c = 0; c < 3; ++c) {
    if (x < col[static_cast<std::size_t>(c)]) return letter_of(c);
    x -= col[static_cast<std::size_t>(c)];
  }
  return 'T';
}

template <typename MotifSource>
LabeledDataset generate(std::size_t n, std::size_t length, std::size_t motif_len, std::uint64_t seed,
                        MotifSource&& motif) {
  if (n % 2 != 0) throw std::invalid_argument("gen_planted: n must be even");
  if (motif_len >= length) throw std::invalid_argument("gen_planted: motif must be shorter than the sequence");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> where(0, length - motif_len);
  LabeledDataset data;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s(length, 'A');
    for (char& c : s) c = uniform_letter(rng);
    Sample sample{"s" + std::to_string(i), DnaSequence("N"), static_cast<int>(i % 2), std::nullopt};
    if (sample.label == 1) {
      const std::size_t at = where(rng);
      const std::string m = motif(rng);
      s.replace(at, motif_len, m);
      sample.motif_start = at;
    }
    sample.sequence = DnaSequence(std::move(s));
    data.samples.push_back(std::move(sample));
  }
  return data;
}

}  // namespace

LabeledDataset gen_planted(std::size_t n, std::size_t length, const DnaSequence& motif, std::uint64_t seed) {
  return generate(n, length, motif.length(), seed, [&](std::mt19937_64&) { return motif.str(); });
}

LabeledDataset gen_planted(std::size_t n, std::size_t length, const ProbabilityColumns& pwm, std::uint64_t seed) {
  if (pwm.empty()) throw std::invalid_argument("gen_planted: empty PWM");
  return generate(n, length, pwm.size(), seed, [&](std::mt19937_64& rng) {
    std::string m;
    for (const auto& col : pwm) m.push_back(sample_letter(rng, col));
    return m;
  });
}

}  // namespace seqlrp::seqdata
