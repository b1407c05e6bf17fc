#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ddtest/distance.hpp"
#include "ddtest/hypothesis.hpp"

namespace ddtest {

struct CalibrationRequest {
  HypothesisFamily family;
  MemberDesign design;
  int n = 0;
  double alpha = 0.05;
  int depth = 8;
  int replicates = 200;
  std::uint64_t seed = 1;
};

/// Monte Carlo threshold with full provenance. Reproducible bit-for-bit from
/// the request; the hash keys persisted tables.
struct CalibrationTable {
  nlohmann::json family_spec;
  nlohmann::json design_spec;
  int n = 0;
  double alpha = 0.05;
  int depth = 8;
  int replicates = 0;
  std::uint64_t seed = 0;
  double threshold = 0.0;
  int quantile_rank = 0;  // 1-based order statistic used per member
  std::string quantile_rule;
  std::vector<double> member_quantiles;
  std::string hash;
};

/// Stable content hash of everything the threshold depends on.
std::string calibration_hash(const CalibrationRequest& request);

/// For each design member, simulates `replicates` samples of length n,
/// computes the projection statistic, and takes the order statistic of rank
/// ceil((1-alpha)(m+1)) (capped at m). The threshold is the maximum over
/// members, the conservative stand-in for the worst case over the family.
CalibrationTable calibrate_threshold(const CalibrationRequest& request);

nlohmann::json table_to_json(const CalibrationTable& table);
CalibrationTable table_from_json(const nlohmann::json& j);

/// File-backed table store keyed by the request hash. Loading verifies the
/// stored hash against the request and refuses mismatches.
class CalibrationCache {
 public:
  explicit CalibrationCache(std::string directory) : directory_(std::move(directory)) {}

  /// Returns the cached table if present, otherwise calibrates and stores.
  /// `hit` reports which happened.
  CalibrationTable get_or_compute(const CalibrationRequest& request, bool* hit = nullptr);

  std::string path_for(const std::string& hash) const;

 private:
  std::string directory_;
};

CalibrationTable load_table_checked(const std::string& path, const CalibrationRequest& request);

struct TestReport {
  std::string test;           // "psi" or "phi"
  int decision = 0;           // 1 rejects the null
  double statistic = 0.0;     // projection distance to H0
  double statistic_alt = 0.0; // phi: projection distance to H1
  double threshold = 0.0;     // psi only
  double tail_bound = 0.0;
  int n = 0;
  double alpha = 0.0;         // psi only
  nlohmann::json witness;
  nlohmann::json witness_alt; // phi only
};

/// Level-alpha goodness-of-fit test: accept H0 exactly when the projection
/// statistic is within the calibrated threshold.
TestReport threshold_test(const Sample& sample, const CalibrationTable& table,
                          const HypothesisFamily& family);

/// Nearest-family classifier between two disjoint families; ties go to the
/// alternative.
TestReport nearest_family_test(const Sample& sample, const HypothesisFamily& h0,
                               const HypothesisFamily& h1, int depth);

/// A fully configured test as a function of the sample (1 = reject H0).
using ConfiguredTest = std::function<int(const Sample&)>;

ConfiguredTest make_threshold_test(CalibrationTable table, HypothesisFamily family);
ConfiguredTest make_nearest_family_test(HypothesisFamily h0, HypothesisFamily h1, int depth);

/// Exact rejection probability by exhaustive enumeration of all |A|^n
/// samples, weighting each by its model marginal. Refuses |A|^n above cap.
double exact_rejection_probability(const ConfiguredTest& test, const ProcessModel& model, int n,
                                   std::uint64_t cap = 1ull << 20);

/// Seeded Monte Carlo estimate of the rejection rate.
double monte_carlo_rejection_rate(const ConfiguredTest& test, const ProcessModel& model, int n,
                                  int replicates, std::uint64_t seed);

struct SmoothingRow {
  int equation = 2;  // 2: deviation upper bound, 3: concentration upper bound
  double epsilon = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};

/// Exhaustively checks, for every epsilon in the grid, that the probability
/// of a large (small) statistic on length-m samples is bounded by the
/// corresponding probability on length-k samples, with the additive
/// corrections 2k/(m-k+1) and the weight of words longer than k. Requires
/// m > 2k > 1 and |A|^m within cap.
std::vector<SmoothingRow> verify_smoothing_bounds(const ProcessModel& model,
                                                  const HypothesisFamily& family, int m, int k,
                                                  const std::vector<double>& eps_grid, int depth,
                                                  std::uint64_t cap = 1ull << 20);

nlohmann::json report_to_json(const TestReport& report);

}  // namespace ddtest
