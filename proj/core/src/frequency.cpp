#include "ddtest/frequency.hpp"

#include <stdexcept>

namespace ddtest {

std::uint64_t occurrence_count(const Sample& sample, const Word& word) {
  if (sample.alphabet() != word.alphabet())
    throw std::invalid_argument("sample and word alphabets differ");
  const int n = sample.length(), len = word.length();
  if (n < len) return 0;
  std::uint64_t count = 0;
  const auto xs = sample.symbols();
  const auto ws = word.symbols();
  for (int i = 0; i + len <= n; ++i) {
    bool match = true;
    for (int j = 0; j < len; ++j) {
      if (xs[static_cast<size_t>(i + j)] != ws[static_cast<size_t>(j)]) { match = false; break; }
    }
    if (match) ++count;
  }
  return count;
}

double frequency(const Sample& sample, const Word& word) {
  if (sample.length() < word.length()) return 0.0;
  const std::uint64_t windows = static_cast<std::uint64_t>(sample.length() - word.length() + 1);
  return static_cast<double>(occurrence_count(sample, word)) / static_cast<double>(windows);
}

FrequencyTable::FrequencyTable(const Sample& sample, int max_length)
    : alphabet_(sample.alphabet()), max_length_(max_length), sample_length_(sample.length()) {
  if (max_length < 1) throw std::invalid_argument("table depth must be >= 1");
  // Rejects depths whose word enumeration would exceed the global cap.
  WeightScheme scheme(alphabet_, max_length);
  const std::uint64_t a = static_cast<std::uint64_t>(alphabet_.size);
  counts_.resize(static_cast<size_t>(max_length));
  const auto xs = sample.symbols();
  std::uint64_t block = 1;
  for (int len = 1; len <= max_length; ++len) {
    block *= a;
    auto& row = counts_[static_cast<size_t>(len - 1)];
    row.assign(block, 0);
    if (sample_length_ < len) continue;
    // Rolling base-a code over windows of this length.
    std::uint64_t code = 0;
    const std::uint64_t mod = block / a;
    for (int i = 0; i < len - 1; ++i) code = code * a + xs[static_cast<size_t>(i)];
    for (int i = len - 1; i < sample_length_; ++i) {
      code = (code % mod) * a + xs[static_cast<size_t>(i)];
      ++row[code];
    }
  }
}

double FrequencyTable::frequency(const Word& word) const {
  if (word.alphabet() != alphabet_) throw std::invalid_argument("table and word alphabets differ");
  if (word.length() > max_length_) throw std::invalid_argument("word longer than table depth");
  return frequency(word.length(), word_rank(word.symbols(), alphabet_));
}

}  // namespace ddtest
