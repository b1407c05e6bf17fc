#pragma once

#include <cstdint>
#include <vector>

#include "ddtest/sample.hpp"
#include "ddtest/words.hpp"

namespace ddtest {

/// Number of (possibly overlapping) occurrences of B in X; 0 when X is
/// shorter than B.
std::uint64_t occurrence_count(const Sample& sample, const Word& word);

/// Occurrence count divided by the window count |X|-|B|+1, or 0 when the
/// sample is shorter than the word.
double frequency(const Sample& sample, const Word& word);

/// One-pass occurrence counts for every word of length <= max_length.
/// Counts and window counts are kept as exact integers; frequencies are
/// formed on demand.
class FrequencyTable {
 public:
  FrequencyTable(const Sample& sample, int max_length);

  Alphabet alphabet() const { return alphabet_; }
  int max_length() const { return max_length_; }
  int sample_length() const { return sample_length_; }

  std::uint64_t count(int len, std::uint64_t rank) const {
    return counts_[static_cast<size_t>(len - 1)][rank];
  }
  /// Windows of the given length in the sample (0 when longer than the sample).
  std::uint64_t windows(int len) const {
    return sample_length_ >= len ? static_cast<std::uint64_t>(sample_length_ - len + 1) : 0;
  }
  double frequency(int len, std::uint64_t rank) const {
    const std::uint64_t w = windows(len);
    return w == 0 ? 0.0 : static_cast<double>(count(len, rank)) / static_cast<double>(w);
  }
  double frequency(const Word& word) const;

 private:
  Alphabet alphabet_;
  int max_length_;
  int sample_length_;
  std::vector<std::vector<std::uint64_t>> counts_;  // per length, indexed by rank
};

/// Convenience wrapper matching the one-shot construction.
inline FrequencyTable frequency_table(const Sample& sample, int max_length) {
  return FrequencyTable(sample, max_length);
}

}  // namespace ddtest
