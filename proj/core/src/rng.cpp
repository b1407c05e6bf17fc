#include "ddtest/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace ddtest {

int Rng::categorical(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("categorical needs at least one weight");
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("categorical weights must have positive sum");
  double u = uniform01() * total;
  for (size_t i = 0; i + 1 < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size() - 1);
}

void Rng::simplex(std::span<double> out) {
  // Normalized exponentials give a uniform draw on the simplex.
  double total = 0.0;
  for (double& x : out) {
    double u;
    do { u = uniform01(); } while (u <= 0.0);
    x = -std::log(u);
    total += x;
  }
  for (double& x : out) x /= total;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  return splitmix64(splitmix64(master) ^ fnv1a64(label));
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index) {
  return splitmix64(derive_seed(master, label) ^ splitmix64(index));
}

}  // namespace ddtest
