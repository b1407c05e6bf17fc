#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "ddtest/distance.hpp"
#include "ddtest/rng.hpp"

namespace ddtest {

namespace {

constexpr double kInvGolden = 0.6180339887498949;

// Minimizes g over [0,1]; returns the best argument through best_t.
double golden_section(const std::function<double(double)>& g, int max_iters, double tol,
                      double& best_t) {
  double a = 0.0, b = 1.0;
  double x1 = b - kInvGolden * (b - a);
  double x2 = a + kInvGolden * (b - a);
  double f1 = g(x1), f2 = g(x2);
  for (int i = 0; i < max_iters && (b - a) > tol; ++i) {
    if (f1 <= f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - kInvGolden * (b - a);
      f1 = g(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + kInvGolden * (b - a);
      f2 = g(x2);
    }
  }
  if (f1 <= f2) { best_t = x1; return f1; }
  best_t = x2;
  return f2;
}

// Sets entry j of the row to t and rescales the rest proportionally.
void pivot_row(std::span<double> row, size_t j, double t) {
  const double rest = 1.0 - row[j];
  row[j] = t;
  if (rest > 0.0) {
    const double scale = (1.0 - t) / rest;
    for (size_t s = 0; s < row.size(); ++s)
      if (s != j) row[s] *= scale;
  } else {
    const double share = row.size() > 1 ? (1.0 - t) / static_cast<double>(row.size() - 1) : 0.0;
    for (size_t s = 0; s < row.size(); ++s)
      if (s != j) row[s] = share;
  }
}

// One coordinate-descent pass over every (row, pivot) of a stochastic
// matrix, golden-section searching each coordinate. Returns the improved
// objective and mutates the matrix to the best point found.
double refine_pass(std::vector<double>& matrix, size_t rows, size_t dim,
                   const std::function<double(const std::vector<double>&)>& eval,
                   const RefineConfig& cfg, double current, int& evals) {
  if (dim < 2) return current;
  std::vector<double> trial = matrix;
  for (size_t r = 0; r < rows; ++r) {
    for (size_t j = 0; j < dim; ++j) {
      auto g = [&](double t) {
        trial = matrix;
        pivot_row(std::span<double>(&trial[r * dim], dim), j, t);
        ++evals;
        return eval(trial);
      };
      double best_t = matrix[r * dim + j];
      const double best = golden_section(g, cfg.max_iters_per_coordinate, cfg.tolerance, best_t);
      if (best < current) {
        pivot_row(std::span<double>(&matrix[r * dim], dim), j, best_t);
        current = best;
      }
    }
  }
  return current;
}

ModelPtr build_markov(Alphabet alphabet, int order, const std::vector<double>& transition,
                      bool* non_unique = nullptr) {
  StationaryLaw law = markov_stationary_law(alphabet, order, transition);
  if (non_unique) *non_unique = !law.unique;
  if (law.unique) return std::make_shared<MarkovModel>(alphabet, order, transition);
  return std::make_shared<MarkovModel>(alphabet, order, transition,
                                       std::move(law.probabilities));
}

ModelPtr build_hmm(Alphabet alphabet, int states, const std::vector<double>& transition,
                   const std::vector<double>& emission, bool* non_unique = nullptr) {
  StationaryLaw law = stationary_distribution(transition, states);
  if (non_unique) *non_unique = !law.unique;
  if (law.unique) return std::make_shared<HMMModel>(alphabet, transition, emission, states);
  return std::make_shared<HMMModel>(alphabet, transition, emission, states,
                                    std::move(law.probabilities));
}

}  // namespace

ProjectionResult project_markov(const Sample& sample, int order, int depth,
                                const RefineConfig& refine) {
  if (order < 0) throw std::invalid_argument("markov order must be >= 0");
  if (sample.length() <= order)
    throw std::invalid_argument("sample must be longer than the markov order");
  const Alphabet alphabet = sample.alphabet();
  const std::uint64_t a = static_cast<std::uint64_t>(alphabet.size);
  std::uint64_t contexts = 1;
  for (int i = 0; i < order; ++i) {
    contexts *= a;
    if (contexts > 1u << 20) throw std::invalid_argument("markov context space too large");
  }
  const int table_depth = std::max(depth, order + 1);
  FrequencyTable table(sample, table_depth);

  ProjectionDiagnostics diag;
  // Plug-in rows: (k+1)-gram counts conditioned on the k-gram context.
  std::vector<double> transition(contexts * a, 0.0);
  for (std::uint64_t ctx = 0; ctx < contexts; ++ctx) {
    std::uint64_t row_sum = 0;
    for (std::uint64_t s = 0; s < a; ++s) row_sum += table.count(order + 1, ctx * a + s);
    if (row_sum == 0) {
      // Context never occurs: any completion is admissible, use uniform.
      for (std::uint64_t s = 0; s < a; ++s)
        transition[ctx * a + s] = 1.0 / static_cast<double>(a);
      ++diag.unseen_contexts;
    } else {
      for (std::uint64_t s = 0; s < a; ++s)
        transition[ctx * a + s] = static_cast<double>(table.count(order + 1, ctx * a + s)) /
                                  static_cast<double>(row_sum);
    }
  }

  bool non_unique = false;
  ModelPtr witness = build_markov(alphabet, order, transition, &non_unique);
  TruncatedDistance best = empirical_distance(table, *witness, depth);

  if (refine.enabled) {
    auto eval = [&](const std::vector<double>& candidate) -> double {
      try {
        return empirical_distance(table, *build_markov(alphabet, order, candidate), depth).value;
      } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    std::vector<double> refined = transition;
    double current = best.value;
    for (int sweep = 0; sweep < refine.sweeps; ++sweep)
      current = refine_pass(refined, contexts, static_cast<size_t>(a), eval, refine, current,
                            diag.iterations);
    if (current < best.value) {
      witness = build_markov(alphabet, order, refined, &non_unique);
      best = empirical_distance(table, *witness, depth);
    }
  }
  diag.initial_not_unique = non_unique;
  return {best, std::move(witness), std::move(diag)};
}

// ---------------------------------------------------------------------------
// Hidden-Markov projection

namespace {

struct EmFit {
  std::vector<double> transition, emission, start;
  double loglik = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool usable = false;
  bool converged = false;
};

EmFit baum_welch(std::span<const Symbol> xs, int states, int alphabet, Rng& rng,
                 const EmConfig& cfg) {
  const size_t n = xs.size();
  const size_t m = static_cast<size_t>(states);
  const size_t a = static_cast<size_t>(alphabet);
  EmFit fit;
  fit.transition.resize(m * m);
  fit.emission.resize(m * a);
  fit.start.resize(m);
  for (size_t i = 0; i < m; ++i) {
    rng.simplex(std::span<double>(&fit.transition[i * m], m));
    rng.simplex(std::span<double>(&fit.emission[i * a], a));
  }
  rng.simplex(fit.start);
  // Keep initial parameters away from zero so every sample has positive
  // probability under the first iterate.
  auto lift = [](std::span<double> row) {
    const double eps = 0.05;
    const double dim = static_cast<double>(row.size());
    for (double& p : row) p = eps / dim + (1.0 - eps) * p;
  };
  for (size_t i = 0; i < m; ++i) {
    lift(std::span<double>(&fit.transition[i * m], m));
    lift(std::span<double>(&fit.emission[i * a], a));
  }
  lift(fit.start);

  std::vector<double> alpha(n * m), scale(n), beta(m), beta_next(m);
  std::vector<double> acc_t(m * m), acc_t_denom(m), acc_e(m * a), gamma(m);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    // Scaled forward pass.
    double ll = 0.0;
    for (size_t j = 0; j < m; ++j) alpha[j] = fit.start[j] * fit.emission[j * a + xs[0]];
    for (size_t t = 0; t < n; ++t) {
      if (t > 0) {
        for (size_t j = 0; j < m; ++j) {
          double acc = 0.0;
          for (size_t i = 0; i < m; ++i) acc += alpha[(t - 1) * m + i] * fit.transition[i * m + j];
          alpha[t * m + j] = acc * fit.emission[j * a + xs[t]];
        }
      }
      double c = 0.0;
      for (size_t j = 0; j < m; ++j) c += alpha[t * m + j];
      if (!(c > 0.0)) return fit;  // sample unreachable under current iterate
      scale[t] = c;
      for (size_t j = 0; j < m; ++j) alpha[t * m + j] /= c;
      ll += std::log(c);
    }
    fit.loglik = ll;
    fit.usable = true;
    fit.iterations = iter + 1;
    if (std::abs(ll - prev_ll) < cfg.tolerance) {
      fit.converged = true;
      return fit;
    }
    prev_ll = ll;

    // Backward pass with on-the-fly accumulation.
    std::fill(acc_t.begin(), acc_t.end(), 0.0);
    std::fill(acc_t_denom.begin(), acc_t_denom.end(), 0.0);
    std::fill(acc_e.begin(), acc_e.end(), 0.0);
    std::fill(beta_next.begin(), beta_next.end(), 1.0);
    for (size_t j = 0; j < m; ++j) acc_e[j * a + xs[n - 1]] += alpha[(n - 1) * m + j];
    std::vector<double> start_new(m);
    for (size_t ti = n - 1; ti-- > 0;) {
      const Symbol nxt = xs[ti + 1];
      const double c_next = scale[ti + 1];
      for (size_t i = 0; i < m; ++i) {
        double b = 0.0;
        for (size_t j = 0; j < m; ++j) {
          const double step = fit.transition[i * m + j] * fit.emission[j * a + nxt] *
                              beta_next[j] / c_next;
          acc_t[i * m + j] += alpha[ti * m + i] * step;
          b += step;
        }
        beta[i] = b;
        const double g = alpha[ti * m + i] * b;
        gamma[i] = g;
        acc_t_denom[i] += g;
        acc_e[i * a + xs[ti]] += g;
      }
      beta.swap(beta_next);
      if (ti == 0) start_new.assign(gamma.begin(), gamma.end());
    }

    // M-step; rows with no mass keep their previous values.
    for (size_t i = 0; i < m; ++i) {
      if (acc_t_denom[i] > 0.0)
        for (size_t j = 0; j < m; ++j) fit.transition[i * m + j] = acc_t[i * m + j] / acc_t_denom[i];
      double e_sum = 0.0;
      for (size_t s = 0; s < a; ++s) e_sum += acc_e[i * a + s];
      if (e_sum > 0.0)
        for (size_t s = 0; s < a; ++s) fit.emission[i * a + s] = acc_e[i * a + s] / e_sum;
    }
    if (n > 1) {
      double g_sum = 0.0;
      for (double g : start_new) g_sum += g;
      if (g_sum > 0.0)
        for (size_t i = 0; i < m; ++i) fit.start[i] = start_new[i] / g_sum;
    }
  }
  return fit;
}

}  // namespace

ProjectionResult project_hmm(const Sample& sample, int states, int depth, const EmConfig& em,
                             const RefineConfig& refine) {
  if (states < 1) throw std::invalid_argument("hmm projection needs at least one state");
  if (sample.length() < 2) throw std::invalid_argument("hmm projection needs at least 2 symbols");
  if (em.restarts < 1) throw std::invalid_argument("em needs at least one restart");
  const Alphabet alphabet = sample.alphabet();
  FrequencyTable table(sample, depth);

  ProjectionDiagnostics diag;
  diag.restarts = em.restarts;
  ModelPtr best_model;
  TruncatedDistance best;
  bool best_non_unique = false;
  for (int r = 0; r < em.restarts; ++r) {
    Rng rng(derive_seed(em.seed, "em-restart", static_cast<std::uint64_t>(r)));
    EmFit fit = baum_welch(sample.symbols(), states, alphabet.size, rng, em);
    diag.iterations += fit.iterations;
    if (!fit.usable) {
      diag.degenerate = true;
      continue;
    }
    bool non_unique = false;
    ModelPtr candidate;
    try {
      candidate = build_hmm(alphabet, states, fit.transition, fit.emission, &non_unique);
    } catch (const std::exception&) {
      diag.degenerate = true;
      continue;
    }
    const TruncatedDistance d = empirical_distance(table, *candidate, depth);
    diag.candidate_distances.push_back(d.value);
    if (!best_model || d.value < best.value) {
      best_model = candidate;
      best = d;
      best_non_unique = non_unique;
    }
  }
  if (!best_model) {
    // Every restart failed; fall back to the i.i.d.-equivalent fit so a
    // witness is still returned.
    diag.degenerate = true;
    std::vector<double> transition(static_cast<size_t>(states) * states,
                                   1.0 / static_cast<double>(states));
    std::vector<double> emission(static_cast<size_t>(states) * alphabet.size, 0.0);
    for (int s = 0; s < alphabet.size; ++s) {
      const double f = table.frequency(1, static_cast<std::uint64_t>(s));
      for (int i = 0; i < states; ++i) emission[static_cast<size_t>(i) * alphabet.size + s] = f;
    }
    best_model = build_hmm(alphabet, states, transition, emission, &best_non_unique);
    best = empirical_distance(table, *best_model, depth);
  }

  if (refine.enabled) {
    const auto* hmm = dynamic_cast<const HMMModel*>(best_model.get());
    std::vector<double> transition = hmm->hidden_transition();
    std::vector<double> emission = hmm->emission();
    double current = best.value;
    auto eval_t = [&](const std::vector<double>& cand) -> double {
      try {
        return empirical_distance(table, *build_hmm(alphabet, states, cand, emission), depth).value;
      } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    auto eval_e = [&](const std::vector<double>& cand) -> double {
      try {
        return empirical_distance(table, *build_hmm(alphabet, states, transition, cand), depth).value;
      } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    for (int sweep = 0; sweep < refine.sweeps; ++sweep) {
      current = refine_pass(transition, static_cast<size_t>(states), static_cast<size_t>(states),
                            eval_t, refine, current, diag.iterations);
      current = refine_pass(emission, static_cast<size_t>(states),
                            static_cast<size_t>(alphabet.size), eval_e, refine, current,
                            diag.iterations);
    }
    if (current < best.value) {
      best_model = build_hmm(alphabet, states, transition, emission, &best_non_unique);
      best = empirical_distance(table, *best_model, depth);
    }
  }
  diag.initial_not_unique = best_non_unique;
  diag.converged = !diag.degenerate;
  return {best, std::move(best_model), std::move(diag)};
}

}  // namespace ddtest
