#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ddtest/testing.hpp"

namespace ddtest {

struct LabeledModel {
  std::string id;
  ModelPtr model;
};

/// One experiment: rejection rates of a test across sample sizes (and levels
/// for the threshold test), for each data-generating model.
struct ErrorCurvePlan {
  std::string test = "psi";  // "psi" | "phi"
  std::optional<HypothesisFamily> h0;
  std::optional<HypothesisFamily> h1;  // phi only
  std::vector<LabeledModel> models;
  std::vector<int> n_grid;
  std::vector<double> alpha_grid;  // psi only
  int replicates = 200;
  int depth = 8;
  MemberDesign design;          // psi calibration
  int calibration_replicates = 200;
  std::uint64_t seed = 1;
};

struct ErrorCurveRow {
  std::string test;
  int n = 0;
  std::optional<double> alpha;  // empty for phi
  std::string model_id;
  int replicates = 0;
  double reject_rate = 0.0;
  double std_err = 0.0;
  std::uint64_t seed = 0;  // per-cell derived seed
};

/// One row per (n, alpha, model). Deterministic given the plan; psi
/// thresholds are pulled from (or stored into) the cache when one is given.
std::vector<ErrorCurveRow> error_curve(const ErrorCurvePlan& plan,
                                       CalibrationCache* cache = nullptr);

/// CSV with header test,n,alpha,model_id,replicates,reject_rate,std_err,seed.
std::string error_curve_csv(const std::vector<ErrorCurveRow>& rows);

struct ConvergenceRow {
  std::uint64_t seed = 0;
  int n = 0;
  double statistic = 0.0;  // empirical distance of the path prefix to xi
  double abs_error = 0.0;  // |statistic - exact truncated distance|
};

/// Empirical distance of growing prefixes of one sampled path of `rho` to
/// the fixed model `xi`, against the exact truncated distance.
std::vector<ConvergenceRow> convergence_experiment(const ProcessModel& rho,
                                                   const ProcessModel& xi,
                                                   const std::vector<int>& n_grid, int depth,
                                                   std::uint64_t seed);

/// CSV with header seed,n,statistic,abs_error.
std::string convergence_csv(const std::vector<ConvergenceRow>& rows);

struct TrajectoryPlan {
  std::optional<HypothesisFamily> h0;
  ModelPtr model;
  std::vector<int> checkpoints;  // strictly increasing sample sizes
  double alpha = 0.05;
  int paths = 100;
  int depth = 8;
  MemberDesign design;
  int calibration_replicates = 200;
  std::uint64_t seed = 1;
};

struct TrajectoryRow {
  int n = 0;
  int rejecting_paths = 0;
  int paths = 0;
};

/// Per-path view of eventual rejection: each fixed path is tested at every
/// checkpoint prefix with the threshold calibrated for that length.
std::vector<TrajectoryRow> trajectory_experiment(const TrajectoryPlan& plan,
                                                 CalibrationCache* cache = nullptr);

/// Binomial standard error; Wilson-adjusted near the boundary (fewer than 5
/// successes or failures).
double rejection_std_err(int rejections, int trials);

}  // namespace ddtest
