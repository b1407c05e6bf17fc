#include "ddtest/sample.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ddtest {

Sample::Sample(Alphabet alphabet, std::vector<Symbol> symbols)
    : alphabet_(alphabet), symbols_(std::move(symbols)) {
  for (Symbol s : symbols_) {
    if (s >= alphabet_.size) throw std::invalid_argument("sample symbol out of alphabet range");
  }
}

Sample::Sample(Alphabet alphabet, const std::string& digits) : alphabet_(alphabet) {
  if (alphabet.size > 10) throw std::invalid_argument("digit strings need alphabet size <= 10");
  symbols_.reserve(digits.size());
  for (char c : digits) {
    if (c < '0' || c > '9') throw std::invalid_argument("sample digit must be 0-9");
    int s = c - '0';
    if (s >= alphabet.size) throw std::invalid_argument("sample symbol out of alphabet range");
    symbols_.push_back(static_cast<Symbol>(s));
  }
}

Sample Sample::prefix(int n) const {
  if (n < 0 || n > length()) throw std::invalid_argument("prefix length out of range");
  return Sample(alphabet_, std::vector<Symbol>(symbols_.begin(), symbols_.begin() + n));
}

std::string Sample::str() const {
  std::string out;
  if (alphabet_.size <= 10) {
    out.reserve(symbols_.size());
    for (Symbol s : symbols_) out.push_back(static_cast<char>('0' + s));
  } else {
    for (size_t i = 0; i < symbols_.size(); ++i) {
      if (i) out.push_back(' ');
      out += std::to_string(int(symbols_[i]));
    }
  }
  return out;
}

namespace {

bool blank(const std::string& line) {
  for (char c : line)
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  return true;
}

Sample parse_line(const std::string& line, Alphabet alphabet) {
  const bool has_space = line.find_first_of(" \t") != std::string::npos;
  if (has_space || alphabet.size > 10) {
    std::istringstream iss(line);
    std::vector<Symbol> symbols;
    long v;
    while (iss >> v) {
      if (v < 0 || v >= alphabet.size) throw std::invalid_argument("sample symbol out of alphabet range");
      symbols.push_back(static_cast<Symbol>(v));
    }
    if (!iss.eof()) throw std::invalid_argument("sample line has non-integer tokens");
    return Sample(alphabet, std::move(symbols));
  }
  std::string trimmed = line;
  while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == '\n')) trimmed.pop_back();
  return Sample(alphabet, trimmed);
}

}  // namespace

std::vector<Sample> read_samples(std::istream& in, Alphabet alphabet) {
  std::vector<Sample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    out.push_back(parse_line(line, alphabet));
  }
  return out;
}

std::vector<Sample> read_sample_file(const std::string& path, Alphabet alphabet) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sample file: " + path);
  return read_samples(in, alphabet);
}

void write_samples(std::ostream& out, const std::vector<Sample>& samples) {
  for (const Sample& s : samples) out << s.str() << '\n';
}

void write_sample_file(const std::string& path, const std::vector<Sample>& samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_samples(out, samples);
  if (!out) throw std::runtime_error("failed writing sample file: " + path);
}

}  // namespace ddtest
