#include "ddtest/words.hpp"

#include <cmath>
#include <limits>

namespace ddtest {

Word::Word(Alphabet alphabet, std::vector<Symbol> symbols)
    : alphabet_(alphabet), symbols_(std::move(symbols)) {
  if (symbols_.empty()) throw std::invalid_argument("word must be non-empty");
  for (Symbol s : symbols_) {
    if (s >= alphabet_.size) throw std::invalid_argument("word symbol out of alphabet range");
  }
}

Word::Word(Alphabet alphabet, std::initializer_list<int> symbols) : alphabet_(alphabet) {
  symbols_.reserve(symbols.size());
  for (int s : symbols) {
    if (s < 0 || s >= alphabet.size) throw std::invalid_argument("word symbol out of alphabet range");
    symbols_.push_back(static_cast<Symbol>(s));
  }
  if (symbols_.empty()) throw std::invalid_argument("word must be non-empty");
}

Word::Word(Alphabet alphabet, const std::string& digits) : alphabet_(alphabet) {
  if (alphabet.size > 10) throw std::invalid_argument("digit strings need alphabet size <= 10");
  symbols_.reserve(digits.size());
  for (char c : digits) {
    if (c < '0' || c > '9') throw std::invalid_argument("word digit must be 0-9");
    int s = c - '0';
    if (s >= alphabet.size) throw std::invalid_argument("word symbol out of alphabet range");
    symbols_.push_back(static_cast<Symbol>(s));
  }
  if (symbols_.empty()) throw std::invalid_argument("word must be non-empty");
}

std::string Word::str() const {
  std::string out;
  out.reserve(symbols_.size());
  if (alphabet_.size <= 10) {
    for (Symbol s : symbols_) out.push_back(static_cast<char>('0' + s));
  } else {
    for (size_t i = 0; i < symbols_.size(); ++i) {
      if (i) out.push_back(' ');
      out += std::to_string(int(symbols_[i]));
    }
  }
  return out;
}

std::uint64_t cumulative_word_count(int len, Alphabet alphabet) {
  if (len < 0) throw std::invalid_argument("length must be >= 0");
  const std::uint64_t a = static_cast<std::uint64_t>(alphabet.size);
  std::uint64_t total = 0, block = 1;
  for (int l = 1; l <= len; ++l) {
    if (block > std::numeric_limits<std::uint64_t>::max() / a)
      throw std::overflow_error("word count overflows 64 bits");
    block *= a;
    if (total > std::numeric_limits<std::uint64_t>::max() - block)
      throw std::overflow_error("word count overflows 64 bits");
    total += block;
  }
  return total;
}

std::uint64_t word_rank(std::span<const Symbol> symbols, Alphabet alphabet) {
  const std::uint64_t a = static_cast<std::uint64_t>(alphabet.size);
  std::uint64_t rank = 0;
  for (Symbol s : symbols) {
    if (rank > (std::numeric_limits<std::uint64_t>::max() - s) / a)
      throw std::overflow_error("word rank overflows 64 bits");
    rank = rank * a + s;
  }
  return rank;
}

void decode_rank(std::uint64_t rank, int len, Alphabet alphabet, std::span<Symbol> out) {
  const std::uint64_t a = static_cast<std::uint64_t>(alphabet.size);
  for (int i = len - 1; i >= 0; --i) {
    out[static_cast<size_t>(i)] = static_cast<Symbol>(rank % a);
    rank /= a;
  }
}

Word index_to_word(std::uint64_t k, Alphabet alphabet) {
  if (k < 1) throw std::invalid_argument("word index must be >= 1");
  int len = 1;
  std::uint64_t before = 0;  // words strictly shorter than len
  for (;;) {
    const std::uint64_t upto = cumulative_word_count(len, alphabet);
    if (k <= upto) break;
    before = upto;
    ++len;
  }
  std::vector<Symbol> symbols(static_cast<size_t>(len));
  decode_rank(k - before - 1, len, alphabet, symbols);
  return Word(alphabet, std::move(symbols));
}

std::uint64_t word_to_index(const Word& word) {
  const std::uint64_t before = cumulative_word_count(word.length() - 1, word.alphabet());
  return before + 1 + word_rank(word.symbols(), word.alphabet());
}

double tail_weight(int max_length, Alphabet alphabet) {
  if (max_length < 0) throw std::invalid_argument("length must be >= 0");
  // 2^-N underflows to exact zero once N is huge; compute N with saturation
  // instead of overflowing the 64-bit count.
  const std::uint64_t a = static_cast<std::uint64_t>(alphabet.size);
  std::uint64_t total = 0, block = 1;
  for (int l = 1; l <= max_length; ++l) {
    if (block > std::numeric_limits<std::uint64_t>::max() / a) return 0.0;
    block *= a;
    if (total > std::numeric_limits<std::uint64_t>::max() - block) return 0.0;
    total += block;
    if (total > 1100) return 0.0;  // below the smallest denormal already
  }
  return std::ldexp(1.0, -static_cast<int>(total));
}

double word_weight(std::uint64_t k) {
  if (k > 1100) return 0.0;
  return std::ldexp(1.0, -static_cast<int>(k));
}

WeightScheme::WeightScheme(Alphabet alphabet, int max_length)
    : alphabet_(alphabet), max_length_(max_length) {
  if (max_length < 0) throw std::invalid_argument("truncation depth must be >= 0");
  counts_.resize(static_cast<size_t>(max_length) + 1, 0);
  for (int l = 1; l <= max_length; ++l) {
    counts_[static_cast<size_t>(l)] = cumulative_word_count(l, alphabet);
    if (counts_[static_cast<size_t>(l)] > kMaxEnumeratedWords)
      throw std::invalid_argument("truncation depth enumerates more than 10^6 words");
  }
  tail_ = tail_weight(max_length, alphabet);
}

}  // namespace ddtest
