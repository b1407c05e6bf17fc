#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace ddtest {

/// Seeded generator with platform-independent draws. mt19937_64 output is
/// pinned by the standard; the uniform and categorical helpers avoid
/// std::uniform_real_distribution, whose mapping is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform draw in [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Index drawn proportionally to the (non-negative) weights.
  int categorical(std::span<const double> weights);

  /// Point uniform on the unit simplex of the given dimension.
  void simplex(std::span<double> out);

 private:
  std::mt19937_64 gen_;
};

/// Stable seed derivation: one master seed fans out to per-task seeds keyed
/// by a label (and optional index). Same inputs, same seed, on any platform.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index);

}  // namespace ddtest
