#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "seqlrp/nn/matrix.hpp"

namespace seqlrp::seqdata {

/// DNA over {A, C, G, T, N}; never empty.
class DnaSequence {
 public:
  /// Strict: throws std::invalid_argument on an empty string or a letter
  /// outside {A, C, G, T, N}.
  explicit DnaSequence(std::string letters);

  /// Upper-cases and maps any letter outside {A, C, G, T} to N.
  static DnaSequence normalized(std::string_view raw);

  std::size_t length() const noexcept { return letters_.size(); }
  const std::string& str() const noexcept { return letters_; }
  char operator[](std::size_t i) const { return letters_[i]; }

  friend bool operator==(const DnaSequence&, const DnaSequence&) = default;

 private:
  std::string letters_;
};

bool is_nucleotide(char c) noexcept;
/// Channel index in A, C, G, T order; -1 for N.
int channel_of(char c) noexcept;
char letter_of(int channel);
char complement(char c) noexcept;

/// A <-> T, C <-> G position-wise; N stays N.
DnaSequence complement(const DnaSequence& seq);
DnaSequence reverse_complement(const DnaSequence& seq);

/// l x 4 one-hot matrix (A, C, G, T columns); N rows are all zero.
nn::Matrix one_hot_encode(const DnaSequence& seq);

}  // namespace seqlrp::seqdata
