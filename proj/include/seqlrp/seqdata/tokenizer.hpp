#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seqlrp/seqdata/sequence.hpp"

namespace seqlrp::seqdata {

/// One token's nucleotide span [start, start + length), 0-based.
struct TokenCell {
  std::size_t start = 0;
  std::size_t length = 0;

  std::size_t end() const noexcept { return start + length; }
  friend bool operator==(const TokenCell&, const TokenCell&) = default;
};

/// Ordered partition of the nucleotide positions {0..l-1} into contiguous,
/// disjoint cells that cover every position exactly once.
class TokenPartition {
 public:
  TokenPartition() = default;
  /// Throws std::invalid_argument unless the cells tile {0..l-1} in order.
  explicit TokenPartition(std::vector<TokenCell> cells);
  static TokenPartition from_sizes(const std::vector<std::size_t>& sizes);
  static TokenPartition singletons(std::size_t length);

  std::size_t size() const noexcept { return cells_.size(); }
  std::size_t sequence_length() const noexcept { return cells_.empty() ? 0 : cells_.back().end(); }
  std::size_t max_cell_length() const noexcept;
  const TokenCell& operator[](std::size_t j) const { return cells_[j]; }
  const std::vector<TokenCell>& cells() const noexcept { return cells_; }
  /// Cell index owning each nucleotide position.
  std::vector<std::size_t> owner_of_positions() const;

  friend bool operator==(const TokenPartition&, const TokenPartition&) = default;

 private:
  std::vector<TokenCell> cells_;
};

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";

/// Token vocabulary. Text format: one token per line, id = 0-based index of
/// the line among non-empty lines. Reserved tokens are written in square
/// brackets and must form a header block before the first nucleotide token;
/// [PAD], [UNK], [CLS] and [SEP] are required, others such as [MASK] are
/// accepted. Every nucleotide token is over {A, C, G, T} and the four
/// single-letter tokens must be present.
class Vocab {
 public:
  static Vocab parse(std::string_view text);
  static Vocab load(const std::filesystem::path& path);
  /// Reserved block followed by every k-mer for k = 1..max_k, then `extra`.
  static Vocab kmers(std::size_t max_k, const std::vector<std::string>& extra = {});

  std::string to_text() const;

  std::size_t size() const noexcept { return tokens_.size(); }
  std::optional<int> find(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t max_token_length() const noexcept { return max_len_; }
  bool is_special(int id) const;

  int pad_id() const noexcept { return pad_; }
  int unk_id() const noexcept { return unk_; }
  int cls_id() const noexcept { return cls_; }
  int sep_id() const noexcept { return sep_; }

 private:
  std::vector<std::string> tokens_;
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
  };
  std::unordered_map<std::string, int, Hash, std::equal_to<>> index_;
  std::size_t max_len_ = 0;
  int pad_ = -1;
  int unk_ = -1;
  int cls_ = -1;
  int sep_ = -1;
};

struct Tokenized {
  std::vector<int> ids;      // [CLS] t_1 ... t_n [SEP]
  TokenPartition partition;  // n cells, specials excluded
};

/// Greedy longest-match segmentation, left to right. Each N becomes a
/// singleton [UNK] cell; a match never spans an N.
Tokenized bpe_tokenize(const DnaSequence& seq, const Vocab& vocab);

/// Non-overlapping k-mers from the left (the tail may be shorter). Chunks
/// containing N, or missing from the vocabulary, fall back to single letters.
Tokenized kmer_tokenize(const DnaSequence& seq, const Vocab& vocab, std::size_t k);

}  // namespace seqlrp::seqdata
