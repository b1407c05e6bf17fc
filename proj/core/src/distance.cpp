#include "ddtest/distance.hpp"

#include <cmath>
#include <stdexcept>

namespace ddtest {

namespace {

void check_depth(int depth) {
  if (depth < 1) throw std::invalid_argument("distance depth must be >= 1");
}

}  // namespace

TruncatedDistance empirical_distance(const FrequencyTable& table, const ProcessModel& model,
                                     int depth) {
  check_depth(depth);
  if (table.alphabet() != model.alphabet())
    throw std::invalid_argument("table and model alphabets differ");
  if (table.max_length() < depth)
    throw std::invalid_argument("frequency table shallower than requested depth");
  const Alphabet alphabet = table.alphabet();
  WeightScheme scheme(alphabet, depth);
  std::vector<Symbol> buf(static_cast<size_t>(depth));
  double total = 0.0;
  for (int len = 1; len <= depth; ++len) {
    if (scheme.weight_of(len, 0) == 0.0) break;  // all longer words weigh exactly 0
    const std::uint64_t block = scheme.words_up_to(len) - scheme.words_up_to(len - 1);
    std::span<Symbol> word(buf.data(), static_cast<size_t>(len));
    for (std::uint64_t rank = 0; rank < block; ++rank) {
      const double w = scheme.weight_of(len, rank);
      if (w == 0.0) break;  // weights only shrink with rank
      decode_rank(rank, len, alphabet, word);
      total += w * std::abs(table.frequency(len, rank) - model.marginal(word));
    }
  }
  return {total, scheme.tail(), depth};
}

TruncatedDistance empirical_distance(const Sample& sample, const ProcessModel& model, int depth) {
  check_depth(depth);
  FrequencyTable table(sample, depth);
  return empirical_distance(table, model, depth);
}

TruncatedDistance exact_distance(const ProcessModel& a, const ProcessModel& b, int depth) {
  check_depth(depth);
  if (a.alphabet() != b.alphabet()) throw std::invalid_argument("model alphabets differ");
  const Alphabet alphabet = a.alphabet();
  WeightScheme scheme(alphabet, depth);
  std::vector<Symbol> buf(static_cast<size_t>(depth));
  double total = 0.0;
  for (int len = 1; len <= depth; ++len) {
    if (scheme.weight_of(len, 0) == 0.0) break;
    const std::uint64_t block = scheme.words_up_to(len) - scheme.words_up_to(len - 1);
    std::span<Symbol> word(buf.data(), static_cast<size_t>(len));
    for (std::uint64_t rank = 0; rank < block; ++rank) {
      const double w = scheme.weight_of(len, rank);
      if (w == 0.0) break;
      decode_rank(rank, len, alphabet, word);
      total += w * std::abs(a.marginal(word) - b.marginal(word));
    }
  }
  return {total, scheme.tail(), depth};
}

ProjectionResult distance_to_family(const Sample& sample, const HypothesisFamily& family,
                                    int depth) {
  check_depth(depth);
  if (sample.alphabet() != family.alphabet())
    throw std::invalid_argument("sample and family alphabets differ");
  switch (family.kind()) {
    case HypothesisFamily::Kind::singleton: {
      ProjectionResult out;
      out.distance = empirical_distance(sample, *family.members()[0], depth);
      out.witness = family.members()[0];
      return out;
    }
    case HypothesisFamily::Kind::finite_set: {
      FrequencyTable table(sample, depth);
      ProjectionResult out;
      bool first = true;
      for (const auto& m : family.members()) {
        TruncatedDistance d = empirical_distance(table, *m, depth);
        if (first || d.value < out.distance.value) {
          out.distance = d;
          out.witness = m;
          first = false;
        }
      }
      return out;
    }
    case HypothesisFamily::Kind::markov_order:
      return project_markov(sample, family.order(), depth, family.projection().refine);
    case HypothesisFamily::Kind::hmm_order:
      return project_hmm(sample, family.order(), depth, family.projection().em,
                         family.projection().refine);
  }
  throw std::logic_error("unreachable family kind");
}

}  // namespace ddtest
