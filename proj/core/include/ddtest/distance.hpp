#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ddtest/frequency.hpp"
#include "ddtest/hypothesis.hpp"
#include "ddtest/process.hpp"

namespace ddtest {

/// Weighted l1 discrepancy summed over all words of length <= depth. The
/// untruncated quantity lies in [value, value + tail_bound].
struct TruncatedDistance {
  double value = 0.0;
  double tail_bound = 0.0;
  int depth = 0;
};

/// Discrepancy between the sample's word frequencies and the model's
/// marginals, truncated at word length `depth`.
TruncatedDistance empirical_distance(const FrequencyTable& table, const ProcessModel& model,
                                     int depth);
TruncatedDistance empirical_distance(const Sample& sample, const ProcessModel& model, int depth);

/// Discrepancy between two models' marginals, truncated at `depth`.
TruncatedDistance exact_distance(const ProcessModel& a, const ProcessModel& b, int depth);

struct ProjectionDiagnostics {
  int iterations = 0;        // EM iterations or refinement evaluations
  int restarts = 0;
  bool converged = true;
  int unseen_contexts = 0;   // plug-in contexts that never occur in the sample
  bool degenerate = false;   // EM could not produce a usable fit
  bool initial_not_unique = false;
  std::vector<double> candidate_distances;  // per restart, before selection
};

/// An approximate minimizer over a family together with the (certified upper
/// bound) distance it achieves.
struct ProjectionResult {
  TruncatedDistance distance;
  ModelPtr witness;
  ProjectionDiagnostics diagnostics;
};

/// Plug-in projection onto order-k chains: transition rows from (k+1)-gram
/// counts, stationary start, uniform rows for contexts absent from the
/// sample. Optional coordinate refinement of the rows.
ProjectionResult project_markov(const Sample& sample, int order, int depth,
                                const RefineConfig& refine = {});

/// Projection onto hidden Markov models with at most `states` states:
/// expectation-maximization with random restarts, candidate selected by
/// empirical distance, optional coordinate refinement.
ProjectionResult project_hmm(const Sample& sample, int states, int depth,
                             const EmConfig& em = {}, const RefineConfig& refine = {});

/// Projection of the sample onto a hypothesis family: exact minimum for
/// singletons and finite sets, plug-in/EM witnesses for parametric families.
ProjectionResult distance_to_family(const Sample& sample, const HypothesisFamily& family,
                                    int depth);

}  // namespace ddtest
