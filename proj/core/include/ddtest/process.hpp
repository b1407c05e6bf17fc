#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ddtest/rng.hpp"
#include "ddtest/sample.hpp"
#include "ddtest/words.hpp"

namespace ddtest {

/// A stationary process over a finite alphabet: exact finite-dimensional
/// marginals plus a seeded path sampler started from the stationary law.
class ProcessModel {
 public:
  virtual ~ProcessModel() = default;

  virtual Alphabet alphabet() const = 0;
  /// Exact probability that the process starts with the given symbols.
  virtual double marginal(std::span<const Symbol> word) const = 0;
  /// Appends n stationary-law symbols to out.
  virtual void sample_into(std::vector<Symbol>& out, int n, Rng& rng) const = 0;
  virtual std::string describe() const = 0;

  double marginal(const Word& word) const;
};

using ModelPtr = std::shared_ptr<const ProcessModel>;

/// Deterministic draw of a length-n path from the model's stationary law.
Sample sample_path(const ProcessModel& model, int n, std::uint64_t seed);

struct StationaryLaw {
  std::vector<double> probabilities;
  bool unique = true;  // false when the chain has several invariant laws
};

/// Invariant law of a row-stochastic matrix (flattened row-major). For
/// reducible or periodic chains a valid law is still returned, with the
/// non-uniqueness flagged.
StationaryLaw stationary_distribution(const std::vector<double>& transition, int states);

/// Invariant law of the k-gram chain induced by order-k transitions
/// (contexts x alphabet, rows by context rank).
StationaryLaw markov_stationary_law(Alphabet alphabet, int order,
                                    const std::vector<double>& transition);

/// I.i.d. symbols with the given distribution.
class IIDModel final : public ProcessModel {
 public:
  IIDModel(Alphabet alphabet, std::vector<double> probabilities);

  using ProcessModel::marginal;
  Alphabet alphabet() const override { return alphabet_; }
  double marginal(std::span<const Symbol> word) const override;
  void sample_into(std::vector<Symbol>& out, int n, Rng& rng) const override;
  std::string describe() const override;

  const std::vector<double>& probabilities() const { return probabilities_; }

 private:
  Alphabet alphabet_;
  std::vector<double> probabilities_;
};

/// Order-k chain with stationary initial law on k-grams. Contexts are
/// indexed by their lexicographic rank in A^k; order 0 degenerates to i.i.d.
/// Construction solves for the invariant k-gram law and fails loudly when it
/// is not unique, unless an explicit initial law is supplied.
class MarkovModel final : public ProcessModel {
 public:
  MarkovModel(Alphabet alphabet, int order, std::vector<double> transition,
              std::optional<std::vector<double>> initial = std::nullopt);

  using ProcessModel::marginal;
  Alphabet alphabet() const override { return alphabet_; }
  double marginal(std::span<const Symbol> word) const override;
  void sample_into(std::vector<Symbol>& out, int n, Rng& rng) const override;
  std::string describe() const override;

  int order() const { return order_; }
  std::uint64_t context_count() const { return contexts_; }
  /// P(symbol | context), context given by rank.
  double transition(std::uint64_t context, Symbol symbol) const {
    return transition_[context * alphabet_.size + symbol];
  }
  const std::vector<double>& transition_matrix() const { return transition_; }
  const std::vector<double>& initial_law() const { return initial_; }
  bool initial_unique() const { return initial_unique_; }

 private:
  Alphabet alphabet_;
  int order_;
  std::uint64_t contexts_;
  std::vector<double> transition_;  // contexts x alphabet, row-major
  std::vector<double> initial_;     // law of the first k symbols
  bool initial_unique_ = true;
};

/// Hidden Markov model with stationary hidden start. The forward recursion
/// renormalizes per step and accumulates log scale, so long words stay
/// finite.
class HMMModel final : public ProcessModel {
 public:
  HMMModel(Alphabet alphabet, std::vector<double> hidden_transition,
           std::vector<double> emission, int states,
           std::optional<std::vector<double>> hidden_initial = std::nullopt);

  using ProcessModel::marginal;
  Alphabet alphabet() const override { return alphabet_; }
  double marginal(std::span<const Symbol> word) const override;
  void sample_into(std::vector<Symbol>& out, int n, Rng& rng) const override;
  std::string describe() const override;

  int states() const { return states_; }
  const std::vector<double>& hidden_transition() const { return hidden_transition_; }
  const std::vector<double>& emission() const { return emission_; }
  const std::vector<double>& hidden_initial() const { return hidden_initial_; }
  bool initial_unique() const { return initial_unique_; }

 private:
  Alphabet alphabet_;
  int states_;
  std::vector<double> hidden_transition_;  // states x states
  std::vector<double> emission_;           // states x alphabet
  std::vector<double> hidden_initial_;
  bool initial_unique_ = true;
};

/// Finite mixture of stationary components. Marginals are the weighted sums;
/// sampling draws one component per path, matching ergodic decomposition.
class MixtureModel final : public ProcessModel {
 public:
  MixtureModel(std::vector<double> weights, std::vector<ModelPtr> components);

  using ProcessModel::marginal;
  Alphabet alphabet() const override;
  double marginal(std::span<const Symbol> word) const override;
  void sample_into(std::vector<Symbol>& out, int n, Rng& rng) const override;
  std::string describe() const override;

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<ModelPtr>& components() const { return components_; }

 private:
  std::vector<double> weights_;
  std::vector<ModelPtr> components_;
};

/// Flattens a mixture into (weight, ergodic component) pairs, expanding
/// nested mixtures; a non-mixture model flattens to itself with weight 1.
std::vector<std::pair<double, ModelPtr>> ergodic_components(const ModelPtr& model);

/// Binary process read off an irrational circle rotation: phase uniform on
/// [0,1), symbol 1 whenever the phase lies in [0, arc). Stationary, ergodic,
/// and not Markov of any order.
class RotationModel final : public ProcessModel {
 public:
  static constexpr double kGoldenAngle = 0.6180339887498949;  // (sqrt(5)-1)/2

  RotationModel(double angle = kGoldenAngle, double arc = 0.5);

  using ProcessModel::marginal;
  Alphabet alphabet() const override { return Alphabet(2); }
  double marginal(std::span<const Symbol> word) const override;
  void sample_into(std::vector<Symbol>& out, int n, Rng& rng) const override;
  std::string describe() const override;

  double angle() const { return angle_; }
  double arc() const { return arc_; }

 private:
  double angle_;
  double arc_;
};

}  // namespace ddtest
