#include "doctest.h"

#include <cmath>
#include <memory>

#include "ddtest/distance.hpp"
#include "ddtest/frequency.hpp"

using namespace ddtest;

namespace {

ModelPtr iid(double p1) { return std::make_shared<IIDModel>(Alphabet(2), std::vector<double>{1.0 - p1, p1}); }

ModelPtr chain(double p1_given_0, double p1_given_1) {
  return std::make_shared<MarkovModel>(
      Alphabet(2), 1, std::vector<double>{1.0 - p1_given_0, p1_given_0, 1.0 - p1_given_1, p1_given_1});
}

ModelPtr all_zero_chain() { return chain(0.0, 0.0); }
ModelPtr all_one_chain() { return chain(1.0, 1.0); }

ModelPtr two_state_flaky() {
  return std::make_shared<HMMModel>(Alphabet(2), std::vector<double>{0.95, 0.05, 0.1, 0.9},
                                    std::vector<double>{0.9, 0.1, 0.2, 0.8}, 2);
}

// Term-by-term recomputation through the public enumeration, independent of
// the table-driven summation in the library.
double naive_empirical_distance(const Sample& x, const ProcessModel& model, int depth) {
  double total = 0.0;
  for (std::uint64_t k = 1; k <= cumulative_word_count(depth, x.alphabet()); ++k) {
    Word w = index_to_word(k, x.alphabet());
    total += word_weight(k) * std::abs(frequency(x, w) - model.marginal(w));
  }
  return total;
}

Sample random_sample(Rng& rng, int n) {
  std::vector<Symbol> symbols(static_cast<size_t>(n));
  for (auto& s : symbols) s = static_cast<Symbol>(rng.next_u64() & 1);
  return Sample(Alphabet(2), std::move(symbols));
}

ModelPtr random_model(Rng& rng) {
  switch (rng.next_u64() % 3) {
    case 0: {
      const double p = 0.05 + 0.9 * rng.uniform01();
      return iid(p);
    }
    case 1:
      return chain(0.05 + 0.9 * rng.uniform01(), 0.05 + 0.9 * rng.uniform01());
    default: {
      std::vector<double> t{0.0, 0.0, 0.0, 0.0}, e{0.0, 0.0, 0.0, 0.0};
      rng.simplex(std::span<double>(t.data(), 2));
      rng.simplex(std::span<double>(t.data() + 2, 2));
      rng.simplex(std::span<double>(e.data(), 2));
      rng.simplex(std::span<double>(e.data() + 2, 2));
      for (double* v : {&t[0], &t[1], &t[2], &t[3], &e[0], &e[1], &e[2], &e[3]})
        *v = 0.05 + 0.9 * *v;
      for (int r = 0; r < 2; ++r) {
        const double ts = t[2 * r] + t[2 * r + 1], es = e[2 * r] + e[2 * r + 1];
        t[2 * r] /= ts; t[2 * r + 1] /= ts;
        e[2 * r] /= es; e[2 * r + 1] /= es;
      }
      return std::make_shared<HMMModel>(Alphabet(2), t, e, 2);
    }
  }
}

}  // namespace

TEST_CASE("empirical distance pinned values") {
  Alphabet binary(2);
  CHECK(empirical_distance(Sample(binary, "0000"), *all_zero_chain(), 4).value == 0.0);
  // Only the two single-symbol terms differ: 1/2 + 1/4.
  CHECK(empirical_distance(Sample(binary, "0000"), *all_one_chain(), 1).value ==
        doctest::Approx(0.75).epsilon(1e-15));
  CHECK(empirical_distance(Sample(binary, "01"), *iid(0.5), 1).value ==
        doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("empirical distance matches the naive oracle on random cases") {
  Rng rng(1234);
  for (int trial = 0; trial < 60; ++trial) {
    Sample x = random_sample(rng, 1 + static_cast<int>(rng.next_u64() % 60));
    auto model = random_model(rng);
    const int depth = 1 + static_cast<int>(rng.next_u64() % 5);
    const double got = empirical_distance(x, *model, depth).value;
    CHECK(got == doctest::Approx(naive_empirical_distance(x, *model, depth)).epsilon(1e-12));
  }
}

TEST_CASE("words longer than the sample still contribute model mass") {
  // A sample of length 1 has zero frequency for every longer word.
  Sample x(Alphabet(2), "0");
  const double d = empirical_distance(x, *iid(0.5), 2).value;
  // Length 1: |1-1/2|/2 + |0-1/2|/4; length 2 words all have nu = 0,
  // contributing sum of w_k * 1/4 over the four words.
  const double expected = 0.25 + 0.125 + 0.25 * (1.0 / 8 + 1.0 / 16 + 1.0 / 32 + 1.0 / 64);
  CHECK(d == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("exact distance pinned values") {
  CHECK(exact_distance(*iid(0.3), *iid(0.3), 6).value == 0.0);
  CHECK(exact_distance(*all_zero_chain(), *all_one_chain(), 2).value ==
        doctest::Approx(0.890625).epsilon(1e-15));
  const auto a = exact_distance(*iid(0.2), *chain(0.4, 0.7), 5);
  const auto b = exact_distance(*chain(0.4, 0.7), *iid(0.2), 5);
  CHECK(a.value == b.value);
  CHECK(a.tail_bound == tail_weight(5, Alphabet(2)));
}

TEST_CASE("truncation sandwich") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    auto m1 = random_model(rng);
    auto m2 = random_model(rng);
    for (int depth = 1; depth < 6; ++depth) {
      const double shallow = exact_distance(*m1, *m2, depth).value;
      const double deeper = exact_distance(*m1, *m2, depth + 1).value;
      CHECK(shallow <= deeper + 1e-15);
      CHECK(deeper <= shallow + tail_weight(depth, Alphabet(2)) + 1e-15);
    }
  }
}

TEST_CASE("distance values stay inside [0, 1 - tail]") {
  Rng rng(88);
  for (int trial = 0; trial < 50; ++trial) {
    auto m1 = random_model(rng);
    auto m2 = random_model(rng);
    const int depth = 1 + static_cast<int>(rng.next_u64() % 6);
    const auto d = exact_distance(*m1, *m2, depth);
    CHECK(d.value >= 0.0);
    CHECK(d.value <= 1.0 - d.tail_bound + 1e-15);
    Sample x = random_sample(rng, 30);
    const auto e = empirical_distance(x, *m1, depth);
    CHECK(e.value <= 1.0 - e.tail_bound + 1e-15);
  }
}

TEST_CASE("triangle inequality on 500 random triples") {
  Rng rng(5150);
  for (int trial = 0; trial < 500; ++trial) {
    auto m1 = random_model(rng);
    auto m2 = random_model(rng);
    auto m3 = random_model(rng);
    const double d12 = exact_distance(*m1, *m2, 4).value;
    const double d23 = exact_distance(*m2, *m3, 4).value;
    const double d13 = exact_distance(*m1, *m3, 4).value;
    CHECK(d13 <= d12 + d23 + 1e-12);
  }
}

TEST_CASE("markov projection pinned cases") {
  Alphabet binary(2);
  SUBCASE("alternating sample recovers the flip chain") {
    auto r = project_markov(Sample(binary, "0101010101"), 1, 4);
    const auto* witness = dynamic_cast<const MarkovModel*>(r.witness.get());
    REQUIRE(witness != nullptr);
    CHECK(witness->transition(0, 1) == 1.0);
    CHECK(witness->transition(1, 0) == 1.0);
    CHECK(r.diagnostics.unseen_contexts == 0);
  }
  SUBCASE("iid data gives near-uniform rows") {
    Sample x = sample_path(*iid(0.5), 10'000, 99);
    auto r = project_markov(x, 1, 6);
    const auto* witness = dynamic_cast<const MarkovModel*>(r.witness.get());
    CHECK(std::abs(witness->transition(0, 1) - 0.5) <= 0.05);
    CHECK(std::abs(witness->transition(1, 1) - 0.5) <= 0.05);
  }
  SUBCASE("constant sample projects to the degenerate chain at distance zero") {
    auto r = project_markov(Sample(binary, "0000"), 1, 3);
    CHECK(r.distance.value == 0.0);
    CHECK(r.diagnostics.unseen_contexts == 1);
    const auto* witness = dynamic_cast<const MarkovModel*>(r.witness.get());
    CHECK(witness->transition(0, 0) == 1.0);
  }
  SUBCASE("sample must be longer than the order") {
    CHECK_THROWS_AS(project_markov(Sample(binary, "01"), 2, 3), std::invalid_argument);
  }
}

TEST_CASE("markov projection distance equals the witness distance") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Sample x = random_sample(rng, 50 + static_cast<int>(rng.next_u64() % 200));
    auto r = project_markov(x, 1, 5);
    CHECK(r.distance.value ==
          doctest::Approx(empirical_distance(x, *r.witness, 5).value).epsilon(1e-14));
  }
}

TEST_CASE("refinement never worsens the plug-in distance") {
  Rng rng(555);
  RefineConfig refine;
  refine.enabled = true;
  for (int trial = 0; trial < 5; ++trial) {
    Sample x = sample_path(*chain(0.3, 0.8), 400, 1000 + trial);
    auto plain = project_markov(x, 1, 5);
    auto refined = project_markov(x, 1, 5, refine);
    CHECK(refined.distance.value <= plain.distance.value + 1e-15);
    CHECK(refined.distance.value ==
          doctest::Approx(empirical_distance(x, *refined.witness, 5).value).epsilon(1e-14));
  }
}

TEST_CASE("hmm projection") {
  Alphabet binary(2);
  SUBCASE("one state reduces to iid with empirical frequencies") {
    Sample x(binary, "0110100110");
    EmConfig em;
    em.restarts = 3;
    auto r = project_hmm(x, 1, 4, em);
    const auto* witness = dynamic_cast<const HMMModel*>(r.witness.get());
    REQUIRE(witness != nullptr);
    CHECK(witness->emission()[1] == doctest::Approx(0.5).epsilon(1e-9));
    const double direct = empirical_distance(x, *iid(0.5), 4).value;
    CHECK(r.distance.value == doctest::Approx(direct).epsilon(1e-9));
  }
  SUBCASE("constant sample fits essentially exactly with two states") {
    EmConfig em;
    em.restarts = 5;
    auto r = project_hmm(Sample(binary, "0000"), 2, 3, em);
    CHECK(r.distance.value < 1e-6);
  }
  SUBCASE("selection picks the best restart") {
    Sample x = sample_path(*two_state_flaky(), 500, 77);
    EmConfig em;
    em.restarts = 6;
    auto r = project_hmm(x, 2, 4, em);
    REQUIRE(!r.diagnostics.candidate_distances.empty());
    for (double d : r.diagnostics.candidate_distances) CHECK(r.distance.value <= d + 1e-15);
    CHECK(r.distance.value ==
          doctest::Approx(empirical_distance(x, *r.witness, 4).value).epsilon(1e-12));
  }
}

TEST_CASE("family projection dispatch") {
  Alphabet binary(2);
  SUBCASE("singleton") {
    auto f = HypothesisFamily::singleton(iid(0.5));
    auto r = distance_to_family(Sample(binary, "01"), f, 1);
    CHECK(r.distance.value == 0.0);
    CHECK(r.witness == f.members()[0]);
  }
  SUBCASE("finite set takes the exact minimum") {
    auto f = HypothesisFamily::finite_set({all_zero_chain(), all_one_chain()});
    auto r = distance_to_family(Sample(binary, "0000"), f, 3);
    CHECK(r.distance.value == 0.0);
    CHECK(r.witness == f.members()[0]);
  }
  SUBCASE("markov delegation") {
    auto f = HypothesisFamily::markov_order(binary, 1);
    Sample x(binary, "0101010101");
    auto direct = project_markov(x, 1, 4);
    auto via = distance_to_family(x, f, 4);
    CHECK(via.distance.value == direct.distance.value);
  }
  SUBCASE("alphabet mismatch") {
    auto f = HypothesisFamily::singleton(iid(0.5));
    CHECK_THROWS_AS(distance_to_family(Sample(Alphabet(3), "012"), f, 2), std::invalid_argument);
  }
}

TEST_CASE("projection dominates every explicit member on a fixture grid") {
  Sample x = sample_path(*chain(0.35, 0.6), 2000, 2024);
  auto family = HypothesisFamily::markov_order(Alphabet(2), 1);
  auto projection = distance_to_family(x, family, 6);
  MemberDesign design;
  design.grid_step = 0.25;
  for (const auto& member : member_design(family, design)) {
    CHECK(projection.distance.value <= empirical_distance(x, *member, 6).value + 1e-12);
  }
}
