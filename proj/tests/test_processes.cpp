#include "doctest.h"

#include <cmath>
#include <memory>

#include "ddtest/frequency.hpp"
#include "ddtest/model_io.hpp"
#include "ddtest/process.hpp"

using namespace ddtest;

namespace {

ModelPtr iid(double p1) { return std::make_shared<IIDModel>(Alphabet(2), std::vector<double>{1.0 - p1, p1}); }

ModelPtr flip_chain() {
  return std::make_shared<MarkovModel>(Alphabet(2), 1, std::vector<double>{0.0, 1.0, 1.0, 0.0});
}

ModelPtr all_zero_chain() {
  return std::make_shared<MarkovModel>(Alphabet(2), 1, std::vector<double>{1.0, 0.0, 1.0, 0.0});
}

ModelPtr all_one_chain() {
  return std::make_shared<MarkovModel>(Alphabet(2), 1, std::vector<double>{0.0, 1.0, 0.0, 1.0});
}

ModelPtr two_state_hmm() {
  return std::make_shared<HMMModel>(Alphabet(2),
                                    std::vector<double>{0.9, 0.1, 0.3, 0.7},
                                    std::vector<double>{0.8, 0.2, 0.25, 0.75}, 2);
}

ModelPtr lazy_chain() {
  return std::make_shared<MarkovModel>(Alphabet(2), 1, std::vector<double>{0.8, 0.2, 0.4, 0.6});
}

// Power iteration, independent of the linear solve in the library.
std::vector<double> power_iteration_law(const std::vector<double>& transition, int m) {
  std::vector<double> law(static_cast<size_t>(m), 1.0 / m), next(static_cast<size_t>(m));
  for (int iter = 0; iter < 100000; ++iter) {
    for (int j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int i = 0; i < m; ++i) acc += law[static_cast<size_t>(i)] * transition[static_cast<size_t>(i) * m + j];
      next[static_cast<size_t>(j)] = acc;
    }
    // Damping handles periodic chains.
    double diff = 0.0;
    for (int j = 0; j < m; ++j) {
      next[static_cast<size_t>(j)] = 0.5 * next[static_cast<size_t>(j)] + 0.5 * law[static_cast<size_t>(j)];
      diff += std::abs(next[static_cast<size_t>(j)] - law[static_cast<size_t>(j)]);
    }
    law.swap(next);
    if (diff < 1e-14) break;
  }
  return law;
}

// Sums over every hidden path; exponential, for tiny cases only.
double hmm_path_sum(const HMMModel& hmm, std::span<const Symbol> word) {
  const int m = hmm.states();
  const int a = hmm.alphabet().size;
  std::vector<int> path(word.size(), 0);
  double total = 0.0;
  for (;;) {
    double p = hmm.hidden_initial()[static_cast<size_t>(path[0])];
    for (size_t t = 0; t < word.size() && p > 0; ++t) {
      p *= hmm.emission()[static_cast<size_t>(path[t]) * a + word[t]];
      if (t + 1 < word.size())
        p *= hmm.hidden_transition()[static_cast<size_t>(path[t]) * m + path[t + 1]];
    }
    total += p;
    size_t pos = word.size();
    while (pos > 0 && path[pos - 1] == m - 1) path[--pos] = 0;
    if (pos == 0) break;
    ++path[pos - 1];
  }
  return total;
}

// Midpoint quadrature over the phase circle.
double rotation_quadrature(const RotationModel& rot, std::span<const Symbol> word, int grid) {
  int hits = 0;
  for (int g = 0; g < grid; ++g) {
    const double phi = (g + 0.5) / grid;
    bool match = true;
    for (size_t i = 0; i < word.size(); ++i) {
      double phase = phi + static_cast<double>(i) * rot.angle();
      phase -= std::floor(phase);
      const Symbol s = phase < rot.arc() ? 1 : 0;
      if (s != word[i]) { match = false; break; }
    }
    if (match) ++hits;
  }
  return static_cast<double>(hits) / grid;
}

std::vector<ModelPtr> fixture_models() {
  auto mixture = std::make_shared<MixtureModel>(
      std::vector<double>{0.3, 0.7}, std::vector<ModelPtr>{iid(0.2), lazy_chain()});
  return {iid(0.3), flip_chain(), lazy_chain(), two_state_hmm(), mixture,
          std::make_shared<RotationModel>()};
}

}  // namespace

TEST_CASE("stationary distribution pinned cases") {
  auto flip = stationary_distribution({0.0, 1.0, 1.0, 0.0}, 2);
  CHECK(flip.unique);
  CHECK(flip.probabilities[0] == doctest::Approx(0.5).epsilon(1e-12));

  auto rank_one = stationary_distribution({0.3, 0.7, 0.3, 0.7}, 2);
  CHECK(rank_one.unique);
  CHECK(rank_one.probabilities[0] == doctest::Approx(0.3).epsilon(1e-12));

  auto identity = stationary_distribution({1.0, 0.0, 0.0, 1.0}, 2);
  CHECK_FALSE(identity.unique);
  const double sum = identity.probabilities[0] + identity.probabilities[1];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(stationary_distribution({0.5, 0.4, 0.5, 0.5}, 2), std::invalid_argument);
}

TEST_CASE("stationary distribution agrees with power iteration") {
  for (auto rows : {std::vector<double>{0.9, 0.1, 0.2, 0.8},
                    std::vector<double>{0.5, 0.5, 0.7, 0.3},
                    std::vector<double>{0.05, 0.95, 0.6, 0.4}}) {
    auto law = stationary_distribution(rows, 2);
    auto oracle = power_iteration_law(rows, 2);
    CHECK(law.probabilities[0] == doctest::Approx(oracle[0]).epsilon(1e-9));
  }
}

TEST_CASE("marginal pinned values") {
  CHECK(iid(0.5)->marginal(Word(Alphabet(2), "01")) == 0.25);
  HMMModel one_state(Alphabet(2), {1.0}, {0.3, 0.7}, 1);
  CHECK(one_state.marginal(Word(Alphabet(2), "1")) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(flip_chain()->marginal(Word(Alphabet(2), "01")) == doctest::Approx(0.5).epsilon(1e-12));
  RotationModel rot;
  CHECK(rot.marginal(Word(Alphabet(2), "0")) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("one-state hmm equals the iid reduction on many words") {
  HMMModel one_state(Alphabet(2), {1.0}, {0.3, 0.7}, 1);
  auto same = iid(0.7);
  for (std::uint64_t k = 1; k <= 30; ++k) {
    Word w = index_to_word(k, Alphabet(2));
    CHECK(one_state.marginal(w) == doctest::Approx(same->marginal(w)).epsilon(1e-12));
  }
}

TEST_CASE("hmm forward recursion matches the path-sum oracle") {
  auto hmm = std::make_shared<HMMModel>(Alphabet(2),
                                        std::vector<double>{0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.25, 0.25, 0.5},
                                        std::vector<double>{0.9, 0.1, 0.5, 0.5, 0.2, 0.8}, 3);
  for (std::uint64_t k = 1; k <= 62; ++k) {
    Word w = index_to_word(k, Alphabet(2));
    CHECK(hmm->marginal(w) ==
          doctest::Approx(hmm_path_sum(*hmm, w.symbols())).epsilon(1e-10));
  }
}

TEST_CASE("rotation marginal matches quadrature") {
  RotationModel rot;
  RotationModel skew(0.3137187, 0.27);
  for (std::uint64_t k = 1; k <= 30; ++k) {
    Word w = index_to_word(k, Alphabet(2));
    CHECK(rot.marginal(w) == doctest::Approx(rotation_quadrature(rot, w.symbols(), 2'000'000)).epsilon(5e-5));
    CHECK(skew.marginal(w) == doctest::Approx(rotation_quadrature(skew, w.symbols(), 2'000'000)).epsilon(5e-5));
  }
  // No run of three low symbols under the golden rotation with a half arc.
  CHECK(rot.marginal(Word(Alphabet(2), "111")) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("stationarity and normalization across all model kinds") {
  Alphabet binary(2);
  for (const auto& model : fixture_models()) {
    for (int len = 1; len <= 6; ++len) {
      double level_sum = 0.0;
      std::vector<Symbol> buf(static_cast<size_t>(len));
      for (std::uint64_t rank = 0; rank < (1u << len); ++rank) {
        decode_rank(rank, len, binary, buf);
        const double p = model->marginal(buf);
        level_sum += p;
        if (len < 6) {
          double right = 0.0, left = 0.0;
          std::vector<Symbol> ext(buf.begin(), buf.end());
          ext.push_back(0);
          for (Symbol s = 0; s < 2; ++s) {
            ext.back() = s;
            right += model->marginal(ext);
          }
          std::vector<Symbol> pre(1, Symbol{0});
          pre.insert(pre.end(), buf.begin(), buf.end());
          for (Symbol s = 0; s < 2; ++s) {
            pre.front() = s;
            left += model->marginal(pre);
          }
          CHECK(std::abs(right - p) <= 1e-12);
          CHECK(std::abs(left - p) <= 1e-12);
        }
      }
      CHECK(std::abs(level_sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("sampler agrees with marginals at n = 10^5") {
  Alphabet binary(2);
  std::vector<ModelPtr> ergodic{iid(0.3), flip_chain(), lazy_chain(), two_state_hmm(),
                                std::make_shared<RotationModel>()};
  std::uint64_t seed = 424242;
  for (const auto& model : ergodic) {
    Sample x = sample_path(*model, 100'000, seed++);
    FrequencyTable table(x, 3);
    std::vector<Symbol> buf(3);
    for (int len = 1; len <= 3; ++len) {
      for (std::uint64_t rank = 0; rank < (1u << len); ++rank) {
        decode_rank(rank, len, binary, std::span<Symbol>(buf.data(), static_cast<size_t>(len)));
        const double p = model->marginal(std::span<const Symbol>(buf.data(), static_cast<size_t>(len)));
        CHECK(std::abs(table.frequency(len, rank) - p) <= 0.02);
      }
    }
  }
}

TEST_CASE("mixture sampling draws one component per path") {
  auto mixture = std::make_shared<MixtureModel>(
      std::vector<double>{0.5, 0.5}, std::vector<ModelPtr>{all_zero_chain(), all_one_chain()});
  // Every path is constant; the mixture marginal of a constant word is 0.5.
  int zero_paths = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Sample x = sample_path(*mixture, 50, seed);
    bool all_same = true;
    for (int i = 1; i < x.length(); ++i)
      if (x[i] != x[0]) all_same = false;
    CHECK(all_same);
    if (x.length() > 0 && x[0] == 0) ++zero_paths;
  }
  CHECK(zero_paths > 70);
  CHECK(zero_paths < 130);
  // Averaged over paths, frequencies recover the mixture marginal.
  double mean_freq_one = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Sample x = sample_path(*mixture, 50, seed);
    FrequencyTable table(x, 1);
    mean_freq_one += table.frequency(1, 1);
  }
  mean_freq_one /= 200;
  CHECK(std::abs(mean_freq_one - mixture->marginal(Word(Alphabet(2), "1"))) <= 0.02);
}

TEST_CASE("mixture marginal is exactly the weighted component sum") {
  auto m1 = iid(0.2);
  auto m2 = lazy_chain();
  MixtureModel mixture({0.3, 0.7}, {m1, m2});
  for (std::uint64_t k = 1; k <= 62; ++k) {
    Word w = index_to_word(k, Alphabet(2));
    CHECK(mixture.marginal(w) == 0.3 * m1->marginal(w) + 0.7 * m2->marginal(w));
  }
}

TEST_CASE("ergodic component flattening") {
  auto m1 = iid(0.1), m2 = iid(0.5), m3 = iid(0.9);
  auto inner = std::make_shared<MixtureModel>(std::vector<double>{0.5, 0.5},
                                              std::vector<ModelPtr>{m1, m2});
  auto outer = std::make_shared<MixtureModel>(std::vector<double>{0.5, 0.5},
                                              std::vector<ModelPtr>{inner, m3});
  auto flat = ergodic_components(outer);
  REQUIRE(flat.size() == 3);
  CHECK(flat[0].first == doctest::Approx(0.25));
  CHECK(flat[0].second == m1);
  CHECK(flat[1].first == doctest::Approx(0.25));
  CHECK(flat[2].first == doctest::Approx(0.5));
  CHECK(flat[2].second == m3);

  auto single = ergodic_components(m2);
  REQUIRE(single.size() == 1);
  CHECK(single[0].first == 1.0);
  CHECK(single[0].second == m2);
}

TEST_CASE("sampling pinned behaviour") {
  auto zero = all_zero_chain();
  CHECK(sample_path(*zero, 5, 9).str() == "00000");

  Sample big = sample_path(*iid(0.5), 100'000, 31337);
  FrequencyTable table(big, 1);
  CHECK(std::abs(table.frequency(1, 1) - 0.5) <= 0.01);

  Sample a = sample_path(*two_state_hmm(), 1000, 5);
  Sample b = sample_path(*two_state_hmm(), 1000, 5);
  CHECK(a.str() == b.str());
  Sample c = sample_path(*two_state_hmm(), 1000, 6);
  CHECK(a.str() != c.str());
}

TEST_CASE("non-unique chains fail loudly unless given an initial law") {
  std::vector<double> identity{1.0, 0.0, 0.0, 1.0};
  CHECK_THROWS_AS(MarkovModel(Alphabet(2), 1, identity), std::invalid_argument);
  MarkovModel pinned(Alphabet(2), 1, identity, std::vector<double>{0.3, 0.7});
  CHECK_FALSE(pinned.initial_unique());
  CHECK(pinned.marginal(Word(Alphabet(2), "0")) == doctest::Approx(0.3));
  // Explicit laws must still be invariant.
  CHECK_THROWS_AS(MarkovModel(Alphabet(2), 1, std::vector<double>{0.0, 1.0, 1.0, 0.0},
                              std::vector<double>{0.3, 0.7}),
                  std::invalid_argument);
}

TEST_CASE("markov order 0 and order 2 marginals") {
  MarkovModel order0(Alphabet(2), 0, {0.25, 0.75});
  CHECK(order0.marginal(Word(Alphabet(2), "10")) == doctest::Approx(0.75 * 0.25).epsilon(1e-12));

  // Order-2 chain: next symbol repeats the one two steps back w.p. 0.9.
  std::vector<double> t2{0.9, 0.1,   // context 00
                         0.9, 0.1,   // context 01
                         0.1, 0.9,   // context 10
                         0.1, 0.9};  // context 11
  MarkovModel order2(Alphabet(2), 2, t2);
  const double p00 = order2.marginal(Word(Alphabet(2), "00"));
  double two_sum = 0.0;
  for (std::uint64_t rank = 0; rank < 4; ++rank) {
    std::vector<Symbol> buf(2);
    decode_rank(rank, 2, Alphabet(2), buf);
    two_sum += order2.marginal(buf);
  }
  CHECK(two_sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(order2.marginal(Word(Alphabet(2), "000")) == doctest::Approx(p00 * 0.9).epsilon(1e-12));
}

TEST_CASE("model json round trip") {
  for (const auto& model : fixture_models()) {
    auto j = model_to_json(*model);
    auto back = model_from_json(j);
    for (std::uint64_t k = 1; k <= 14; ++k) {
      Word w = index_to_word(k, Alphabet(2));
      CHECK(back->marginal(w) == doctest::Approx(model->marginal(w)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(model_from_json(nlohmann::json{{"kind", "nope"}}), std::invalid_argument);
  CHECK_THROWS_AS(model_from_json(nlohmann::json::array()), std::invalid_argument);
}
