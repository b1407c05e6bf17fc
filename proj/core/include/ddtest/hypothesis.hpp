#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "ddtest/process.hpp"

namespace ddtest {

/// Coordinate refinement of a projection witness (golden-section sweeps over
/// transition/emission parameters). Off by default; the plug-in or EM fit is
/// already a certified upper bound.
struct RefineConfig {
  bool enabled = false;
  int sweeps = 2;
  int max_iters_per_coordinate = 24;
  double tolerance = 1e-3;
};

/// Expectation-maximization settings for hidden-Markov projection.
struct EmConfig {
  int restarts = 20;
  int max_iters = 200;
  double tolerance = 1e-8;
  std::uint64_t seed = 1;
};

struct ProjectionConfig {
  RefineConfig refine;
  EmConfig em;
};

/// A hypothesis family: a set of stationary ergodic processes the test
/// statistic projects onto. Singletons and finite sets list their members;
/// markov_order(k) and hmm_order(k) are the parametric families of all
/// order-<=k chains and all <=k-state hidden Markov processes.
class HypothesisFamily {
 public:
  enum class Kind { singleton, finite_set, markov_order, hmm_order };

  static HypothesisFamily singleton(ModelPtr member);
  static HypothesisFamily finite_set(std::vector<ModelPtr> members);
  static HypothesisFamily markov_order(Alphabet alphabet, int order, ProjectionConfig cfg = {});
  static HypothesisFamily hmm_order(Alphabet alphabet, int states, ProjectionConfig cfg = {});

  Kind kind() const { return kind_; }
  Alphabet alphabet() const { return alphabet_; }
  const std::vector<ModelPtr>& members() const { return members_; }
  int order() const { return order_; }
  const ProjectionConfig& projection() const { return projection_; }
  std::string describe() const;

 private:
  HypothesisFamily(Kind kind, Alphabet alphabet) : kind_(kind), alphabet_(alphabet) {}

  Kind kind_;
  Alphabet alphabet_;
  std::vector<ModelPtr> members_;  // singleton / finite_set
  int order_ = 0;                  // markov order or hmm state count
  ProjectionConfig projection_;
};

/// How to populate a parametric family with concrete members for threshold
/// calibration: a per-parameter grid plus random draws, with probabilities
/// clamped into [margin, 1-margin] so near-deterministic members cannot
/// dominate finite-sample thresholds.
struct MemberDesign {
  double grid_step = 0.0;   // 0 disables the grid
  int random_count = 0;
  std::uint64_t seed = 1;
  double clamp_margin = 0.01;
  std::uint64_t max_members = 100'000;
};

/// Concrete members of the family under the given design. Singletons and
/// finite sets return their members as-is. Grids larger than
/// design.max_members fail loudly rather than subsample.
std::vector<ModelPtr> member_design(const HypothesisFamily& family, const MemberDesign& design);

nlohmann::json family_to_json(const HypothesisFamily& family);
HypothesisFamily family_from_json(const nlohmann::json& spec);
nlohmann::json design_to_json(const MemberDesign& design);
MemberDesign design_from_json(const nlohmann::json& spec);

}  // namespace ddtest
