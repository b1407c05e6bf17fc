#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ddtest/words.hpp"

namespace ddtest {

/// A finite symbol sequence X_1..X_n; n may be zero.
class Sample {
 public:
  explicit Sample(Alphabet alphabet) : alphabet_(alphabet) {}
  Sample(Alphabet alphabet, std::vector<Symbol> symbols);
  Sample(Alphabet alphabet, const std::string& digits);

  Alphabet alphabet() const { return alphabet_; }
  int length() const { return static_cast<int>(symbols_.size()); }
  std::span<const Symbol> symbols() const { return symbols_; }
  Symbol operator[](int i) const { return symbols_[static_cast<size_t>(i)]; }

  /// First n symbols as a view-backed sample (shares no storage; copies).
  Sample prefix(int n) const;
  std::string str() const;

  std::vector<Symbol>& mutable_symbols() { return symbols_; }

 private:
  Alphabet alphabet_;
  std::vector<Symbol> symbols_;
};

/// Sample files are plain text, one sample per line, blank lines ignored.
/// Symbols are contiguous digits when the alphabet has at most 10 symbols,
/// whitespace-separated integers otherwise.
std::vector<Sample> read_samples(std::istream& in, Alphabet alphabet);
std::vector<Sample> read_sample_file(const std::string& path, Alphabet alphabet);
void write_samples(std::ostream& out, const std::vector<Sample>& samples);
void write_sample_file(const std::string& path, const std::vector<Sample>& samples);

}  // namespace ddtest
