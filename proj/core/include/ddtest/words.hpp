#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddtest {

using Symbol = std::uint8_t;

/// Finite alphabet; symbols are the contiguous range 0..size-1.
struct Alphabet {
  int size = 2;

  explicit Alphabet(int s = 2) : size(s) {
    if (s < 1 || s > 255) throw std::invalid_argument("alphabet size must be in [1,255]");
  }
  bool operator==(const Alphabet&) const = default;
};

/// A non-empty tuple of symbols over a fixed alphabet.
class Word {
 public:
  Word(Alphabet alphabet, std::vector<Symbol> symbols);
  Word(Alphabet alphabet, std::initializer_list<int> symbols);
  /// Parses a digit string such as "010" (alphabet size <= 10).
  Word(Alphabet alphabet, const std::string& digits);

  Alphabet alphabet() const { return alphabet_; }
  int length() const { return static_cast<int>(symbols_.size()); }
  std::span<const Symbol> symbols() const { return symbols_; }
  Symbol operator[](int i) const { return symbols_[static_cast<size_t>(i)]; }
  std::string str() const;

  bool operator==(const Word&) const = default;

 private:
  Alphabet alphabet_;
  std::vector<Symbol> symbols_;
};

/// Number of words of length <= len over the alphabet; throws on uint64 overflow.
std::uint64_t cumulative_word_count(int len, Alphabet alphabet);

/// Lexicographic rank of a word within the block of words of its own length.
std::uint64_t word_rank(std::span<const Symbol> symbols, Alphabet alphabet);

/// Writes the rank-th length-`len` word into `out` (most significant symbol first).
void decode_rank(std::uint64_t rank, int len, Alphabet alphabet, std::span<Symbol> out);

/// k-th word (k >= 1) in the length-lexicographic enumeration: shorter words
/// first, lexicographic within a length.
Word index_to_word(std::uint64_t k, Alphabet alphabet);

/// Inverse of index_to_word.
std::uint64_t word_to_index(const Word& word);

/// Total weight of all words of length > max_length: 2^-N where N is the
/// number of words of length <= max_length. Closed form, no summation.
double tail_weight(int max_length, Alphabet alphabet);

/// Weight of the k-th word, 2^-k. Underflows to exact 0 for k > 1074.
double word_weight(std::uint64_t k);

/// Enumeration plan over all words of length <= max_length, with the global
/// index and geometric weight of each word. Word enumeration is capped at
/// 10^6 words; deeper truncations are rejected up front.
class WeightScheme {
 public:
  static constexpr std::uint64_t kMaxEnumeratedWords = 1'000'000;

  WeightScheme(Alphabet alphabet, int max_length);

  Alphabet alphabet() const { return alphabet_; }
  int max_length() const { return max_length_; }
  /// N_len for len <= max_length.
  std::uint64_t words_up_to(int len) const { return counts_[static_cast<size_t>(len)]; }
  std::uint64_t total_words() const { return counts_[static_cast<size_t>(max_length_)]; }
  double tail() const { return tail_; }

  /// Global index of the word (len, rank).
  std::uint64_t index_of(int len, std::uint64_t rank) const {
    return counts_[static_cast<size_t>(len - 1)] + 1 + rank;
  }
  double weight_of(int len, std::uint64_t rank) const { return word_weight(index_of(len, rank)); }

 private:
  Alphabet alphabet_;
  int max_length_;
  std::vector<std::uint64_t> counts_;  // counts_[l] = N_l
  double tail_;
};

}  // namespace ddtest
