#include "seqlrp/seqdata/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "seqlrp/error.hpp"

namespace seqlrp::seqdata {

TokenPartition::TokenPartition(std::vector<TokenCell> cells) : cells_(std::move(cells)) {
  std::size_t next = 0;
  for (const auto& c : cells_) {
    if (c.length == 0) throw std::invalid_argument("TokenPartition: empty cell");
    if (c.start != next) throw std::invalid_argument("TokenPartition: cells must be contiguous and ordered");
    next = c.end();
  }
}

TokenPartition TokenPartition::from_sizes(const std::vector<std::size_t>& sizes) {
  std::vector<TokenCell> cells;
  std::size_t pos = 0;
  for (std::size_t s : sizes) {
    cells.push_back({pos, s});
    pos += s;
  }
  return TokenPartition(std::move(cells));
}

TokenPartition TokenPartition::singletons(std::size_t length) {
  return from_sizes(std::vector<std::size_t>(length, 1));
}

std::size_t TokenPartition::max_cell_length() const noexcept {
  std::size_t m = 0;
  for (const auto& c : cells_) m = std::max(m, c.length);
  return m;
}

std::vector<std::size_t> TokenPartition::owner_of_positions() const {
  std::vector<std::size_t> owner(sequence_length());
  for (std::size_t j = 0; j < cells_.size(); ++j)
    for (std::size_t i = cells_[j].start; i < cells_[j].end(); ++i) owner[i] = j;
  return owner;
}

namespace {

bool is_reserved(std::string_view t) { return t.size() >= 2 && t.front() == '[' && t.back() == ']'; }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Vocab Vocab::parse(std::string_view text) {
  Vocab v;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool in_header = true;
  while (std::getline(in, line)) {
    ++lineno;
    std::string tok = trim(line);
    if (tok.empty()) continue;
    if (is_reserved(tok)) {
      if (!in_header) throw ParseError("reserved token " + tok + " after the header block", lineno);
    } else {
      in_header = false;
      for (char c : tok)
        if (!is_nucleotide(c)) throw ParseError("token '" + tok + "' is not over {A,C,G,T}", lineno);
      v.max_len_ = std::max(v.max_len_, tok.size());
    }
    if (v.index_.contains(tok)) throw ParseError("duplicate token " + tok, lineno);
    const int id = static_cast<int>(v.tokens_.size());
    v.index_.emplace(tok, id);
    v.tokens_.push_back(std::move(tok));
  }
  auto require = [&](std::string_view name) {
    auto id = v.find(name);
    if (!id) throw ParseError("vocabulary lacks reserved token " + std::string(name));
    return *id;
  };
  v.pad_ = require(kPadToken);
  v.unk_ = require(kUnkToken);
  v.cls_ = require(kClsToken);
  v.sep_ = require(kSepToken);
  for (const char* s : {"A", "C", "G", "T"})
    if (!v.find(s)) throw ParseError(std::string("vocabulary lacks single-nucleotide token ") + s);
  return v;
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read vocabulary " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Vocab Vocab::kmers(std::size_t max_k, const std::vector<std::string>& extra) {
  std::string text = "[PAD]\n[UNK]\n[CLS]\n[SEP]\n[MASK]\n";
  std::vector<std::string> layer{""};
  for (std::size_t k = 1; k <= max_k; ++k) {
    std::vector<std::string> next;
    for (const auto& p : layer)
      for (char c : {'A', 'C', 'G', 'T'}) next.push_back(p + c);
    for (const auto& t : next) text += t + "\n";
    layer = std::move(next);
  }
  for (const auto& t : extra) text += t + "\n";
  return parse(text);
}

std::string Vocab::to_text() const {
  std::string out;
  for (const auto& t : tokens_) out += t + "\n";
  return out;
}

std::optional<int> Vocab::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocab::is_special(int id) const { return is_reserved(token(id)); }

Tokenized bpe_tokenize(const DnaSequence& seq, const Vocab& vocab) {
  Tokenized out;
  out.ids.push_back(vocab.cls_id());
  std::vector<TokenCell> cells;
  const std::string& s = seq.str();
  std::size_t pos = 0;
  while (pos < s.size()) {
    if (s[pos] == 'N') {
      out.ids.push_back(vocab.unk_id());
      cells.push_back({pos, 1});
      ++pos;
      continue;
    }
    std::size_t run = 0;
    while (pos + run < s.size() && s[pos + run] != 'N' && run < vocab.max_token_length()) ++run;
    for (std::size_t len = run; len >= 1; --len) {
      if (auto id = vocab.find(std::string_view(s).substr(pos, len))) {
        out.ids.push_back(*id);
        cells.push_back({pos, len});
        pos += len;
        break;
      }
    }
  }
  out.ids.push_back(vocab.sep_id());
  out.partition = TokenPartition(std::move(cells));
  return out;
}

Tokenized kmer_tokenize(const DnaSequence& seq, const Vocab& vocab, std::size_t k) {
  if (k == 0) throw std::invalid_argument("kmer_tokenize: k must be >= 1");
  Tokenized out;
  out.ids.push_back(vocab.cls_id());
  std::vector<TokenCell> cells;
  const std::string& s = seq.str();
  for (std::size_t pos = 0; pos < s.size(); pos += k) {
    const std::size_t len = std::min(k, s.size() - pos);
    const std::string_view chunk = std::string_view(s).substr(pos, len);
    auto id = chunk.find('N') == std::string_view::npos ? vocab.find(chunk) : std::nullopt;
    if (id) {
      out.ids.push_back(*id);
      cells.push_back({pos, len});
      continue;
    }
    for (std::size_t i = 0; i < len; ++i) {
      const char c = chunk[i];
      out.ids.push_back(c == 'N' ? vocab.unk_id() : *vocab.find(std::string(1, c)));
      cells.push_back({pos + i, 1});
    }
  }
  out.ids.push_back(vocab.sep_id());
  out.partition = TokenPartition(std::move(cells));
  return out;
}

}  // namespace seqlrp::seqdata
