#include "seqlrp/seqdata/sequence.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace seqlrp::seqdata {

bool is_nucleotide(char c) noexcept { return c == 'A' || c == 'C' || c == 'G' || c == 'T'; }

int channel_of(char c) noexcept {
  switch (c) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'T': return 3;
    default: return -1;
  }
}

char letter_of(int channel) {
  static constexpr char kLetters[] = {'A', 'C', 'G', 'T'};
  if (channel < 0 || channel > 3) throw std::out_of_range("letter_of: channel must be 0..3");
  return kLetters[channel];
}

char complement(char c) noexcept {
  switch (c) {
    case 'A': return 'T';
    case 'T': return 'A';
    case 'C': return 'G';
    case 'G': return 'C';
    default: return 'N';
  }
}

DnaSequence::DnaSequence(std::string letters) : letters_(std::move(letters)) {
  if (letters_.empty()) throw std::invalid_argument("DnaSequence: empty sequence");
  for (char c : letters_) {
    if (!is_nucleotide(c) && c != 'N')
      throw std::invalid_argument(std::string("DnaSequence: invalid letter '") + c + "'");
  }
}

DnaSequence DnaSequence::normalized(std::string_view raw) {
  std::string s(raw);
  for (char& c : s) {
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (!is_nucleotide(c)) c = 'N';
  }
  return DnaSequence(std::move(s));
}

DnaSequence complement(const DnaSequence& seq) {
  std::string s = seq.str();
  for (char& c : s) c = complement(c);
  return DnaSequence(std::move(s));
}

DnaSequence reverse_complement(const DnaSequence& seq) {
  std::string s = complement(seq).str();
  std::reverse(s.begin(), s.end());
  return DnaSequence(std::move(s));
}

nn::Matrix one_hot_encode(const DnaSequence& seq) {
  nn::Matrix m(seq.length(), 4);
  for (std::size_t i = 0; i < seq.length(); ++i) {
    const int ch = channel_of(seq[i]);
    if (ch >= 0) m(i, static_cast<std::size_t>(ch)) = 1.0;
  }
  return m;
}

}  // namespace seqlrp::seqdata
