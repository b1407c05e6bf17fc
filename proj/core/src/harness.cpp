#include "ddtest/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "ddtest/parallel.hpp"
#include "ddtest/rng.hpp"

namespace ddtest {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void check_grid(const std::vector<int>& grid) {
  if (grid.empty()) throw std::invalid_argument("n grid must be non-empty");
  for (size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1]) throw std::invalid_argument("n grid must be strictly increasing");
  if (grid.front() < 1) throw std::invalid_argument("n grid entries must be >= 1");
}

CalibrationTable table_for(const HypothesisFamily& family, const MemberDesign& design, int n,
                           double alpha, int depth, int replicates, std::uint64_t seed,
                           CalibrationCache* cache) {
  CalibrationRequest request{family, design, n, alpha, depth, replicates, seed};
  if (cache) return cache->get_or_compute(request);
  return calibrate_threshold(request);
}

}  // namespace

double rejection_std_err(int rejections, int trials) {
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(rejections) / n;
  if (rejections >= 5 && trials - rejections >= 5)
    return std::sqrt(p * (1.0 - p) / n);
  // Wilson-adjusted rate stabilizes the estimate near 0 and 1.
  const double z = 1.96;
  const double centre = (rejections + z * z / 2.0) / (n + z * z);
  return std::sqrt(centre * (1.0 - centre) / (n + z * z));
}

std::vector<ErrorCurveRow> error_curve(const ErrorCurvePlan& plan, CalibrationCache* cache) {
  check_grid(plan.n_grid);
  if (plan.replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  if (plan.models.empty()) throw std::invalid_argument("plan needs at least one model");
  const bool is_psi = plan.test == "psi";
  if (!is_psi && plan.test != "phi") throw std::invalid_argument("test must be psi or phi");
  if (!plan.h0) throw std::invalid_argument("plan needs a null family");
  if (is_psi && plan.alpha_grid.empty())
    throw std::invalid_argument("psi plan needs an alpha grid");
  if (!is_psi && !plan.h1) throw std::invalid_argument("phi plan needs two families");
  for (const auto& m : plan.models)
    if (!m.model) throw std::invalid_argument("plan model is null");

  const std::vector<double> alphas = is_psi ? plan.alpha_grid : std::vector<double>{0.0};
  std::vector<ErrorCurveRow> rows;
  for (int n : plan.n_grid) {
    for (double alpha : alphas) {
      ConfiguredTest test;
      if (is_psi) {
        // Calibration noise must be independent of the trial draws.
        const std::uint64_t calib_seed = derive_seed(plan.seed, "calibration");
        CalibrationTable table = table_for(*plan.h0, plan.design, n, alpha, plan.depth,
                                           plan.calibration_replicates, calib_seed, cache);
        test = make_threshold_test(std::move(table), *plan.h0);
      } else {
        test = make_nearest_family_test(*plan.h0, *plan.h1, plan.depth);
      }
      for (const auto& labeled : plan.models) {
        ErrorCurveRow row;
        row.test = plan.test;
        row.n = n;
        if (is_psi) row.alpha = alpha;
        row.model_id = labeled.id;
        row.replicates = plan.replicates;
        row.seed = derive_seed(plan.seed, "cell:" + plan.test + ":" + labeled.id,
                               static_cast<std::uint64_t>(n) * 131ULL +
                                   static_cast<std::uint64_t>(alpha * 1e6));
        std::vector<int> rejected(static_cast<size_t>(plan.replicates), 0);
        parallel_for(rejected.size(), [&](size_t i) {
          Sample x = sample_path(*labeled.model, n, derive_seed(row.seed, "trial", i));
          rejected[i] = test(x);
        });
        int count = 0;
        for (int r : rejected) count += r;
        row.reject_rate = static_cast<double>(count) / plan.replicates;
        row.std_err = rejection_std_err(count, plan.replicates);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::string error_curve_csv(const std::vector<ErrorCurveRow>& rows) {
  std::string out = "test,n,alpha,model_id,replicates,reject_rate,std_err,seed\n";
  for (const auto& r : rows) {
    out += r.test;
    out += ',';
    out += std::to_string(r.n);
    out += ',';
    if (r.alpha) out += format_double(*r.alpha);
    out += ',';
    out += r.model_id;
    out += ',';
    out += std::to_string(r.replicates);
    out += ',';
    out += format_double(r.reject_rate);
    out += ',';
    out += format_double(r.std_err);
    out += ',';
    out += std::to_string(r.seed);
    out += '\n';
  }
  return out;
}

std::vector<ConvergenceRow> convergence_experiment(const ProcessModel& rho,
                                                   const ProcessModel& xi,
                                                   const std::vector<int>& n_grid, int depth,
                                                   std::uint64_t seed) {
  check_grid(n_grid);
  if (rho.alphabet() != xi.alphabet()) throw std::invalid_argument("model alphabets differ");
  const double exact = exact_distance(rho, xi, depth).value;
  // One growing path: the limit statement is about prefixes of a single
  // realization.
  Sample path = sample_path(rho, n_grid.back(), seed);
  std::vector<ConvergenceRow> rows(n_grid.size());
  parallel_for(n_grid.size(), [&](size_t i) {
    Sample prefix = path.prefix(n_grid[i]);
    const double stat = empirical_distance(prefix, xi, depth).value;
    rows[i] = {seed, n_grid[i], stat, std::abs(stat - exact)};
  });
  return rows;
}

std::string convergence_csv(const std::vector<ConvergenceRow>& rows) {
  std::string out = "seed,n,statistic,abs_error\n";
  for (const auto& r : rows) {
    out += std::to_string(r.seed);
    out += ',';
    out += std::to_string(r.n);
    out += ',';
    out += format_double(r.statistic);
    out += ',';
    out += format_double(r.abs_error);
    out += '\n';
  }
  return out;
}

std::vector<TrajectoryRow> trajectory_experiment(const TrajectoryPlan& plan,
                                                 CalibrationCache* cache) {
  check_grid(plan.checkpoints);
  if (plan.paths < 1) throw std::invalid_argument("need at least one path");
  if (!plan.model) throw std::invalid_argument("plan model is null");
  if (!plan.h0) throw std::invalid_argument("plan needs a null family");
  const std::uint64_t calib_seed = derive_seed(plan.seed, "calibration");
  std::vector<CalibrationTable> tables;
  tables.reserve(plan.checkpoints.size());
  for (int n : plan.checkpoints)
    tables.push_back(table_for(*plan.h0, plan.design, n, plan.alpha, plan.depth,
                               plan.calibration_replicates, calib_seed, cache));

  const int n_max = plan.checkpoints.back();
  std::vector<std::vector<int>> decisions(static_cast<size_t>(plan.paths));
  parallel_for(static_cast<size_t>(plan.paths), [&](size_t p) {
    Sample path = sample_path(*plan.model, n_max, derive_seed(plan.seed, "path", p));
    auto& row = decisions[p];
    row.resize(plan.checkpoints.size());
    for (size_t c = 0; c < plan.checkpoints.size(); ++c) {
      Sample prefix = path.prefix(plan.checkpoints[c]);
      row[c] = threshold_test(prefix, tables[c], *plan.h0).decision;
    }
  });
  std::vector<TrajectoryRow> rows(plan.checkpoints.size());
  for (size_t c = 0; c < plan.checkpoints.size(); ++c) {
    int rejecting = 0;
    for (const auto& d : decisions) rejecting += d[c];
    rows[c] = {plan.checkpoints[c], rejecting, plan.paths};
  }
  return rows;
}

}  // namespace ddtest
