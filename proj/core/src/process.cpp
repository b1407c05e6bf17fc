#include "ddtest/process.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ddtest {

namespace {

constexpr double kRowSumTol = 1e-9;

void check_rows_stochastic(const std::vector<double>& matrix, std::size_t rows,
                           std::size_t cols, const char* what) {
  if (matrix.size() != rows * cols) throw std::invalid_argument(std::string(what) + ": bad shape");
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = matrix[r * cols + c];
      if (!(v >= -1e-12) || !std::isfinite(v))
        throw std::invalid_argument(std::string(what) + ": negative or non-finite entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTol)
      throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
  }
}

void check_law(const std::vector<double>& law, std::size_t size, const char* what) {
  if (law.size() != size) throw std::invalid_argument(std::string(what) + ": bad length");
  double sum = 0.0;
  for (double v : law) {
    if (!(v >= -1e-12) || !std::isfinite(v))
      throw std::invalid_argument(std::string(what) + ": negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kRowSumTol)
    throw std::invalid_argument(std::string(what) + ": does not sum to 1");
}

void check_symbols(std::span<const Symbol> word, Alphabet alphabet) {
  for (Symbol s : word) {
    if (s >= alphabet.size) throw std::invalid_argument("word symbol out of alphabet range");
  }
}

double max_invariance_residual(const std::vector<double>& law,
                               const std::vector<double>& transition, std::size_t states) {
  double worst = 0.0;
  for (std::size_t j = 0; j < states; ++j) {
    double flow = 0.0;
    for (std::size_t i = 0; i < states; ++i) flow += law[i] * transition[i * states + j];
    worst = std::max(worst, std::abs(flow - law[j]));
  }
  return worst;
}

}  // namespace

double ProcessModel::marginal(const Word& word) const {
  if (word.alphabet() != alphabet()) throw std::invalid_argument("word alphabet mismatch");
  return marginal(word.symbols());
}

Sample sample_path(const ProcessModel& model, int n, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("path length must be >= 0");
  Rng rng(seed);
  std::vector<Symbol> symbols;
  symbols.reserve(static_cast<size_t>(n));
  model.sample_into(symbols, n, rng);
  return Sample(model.alphabet(), std::move(symbols));
}

StationaryLaw stationary_distribution(const std::vector<double>& transition, int states) {
  if (states < 1) throw std::invalid_argument("chain needs at least one state");
  check_rows_stochastic(transition, static_cast<size_t>(states), static_cast<size_t>(states),
                        "transition matrix");
  const int m = states;
  // pi P = pi with sum(pi) = 1: least squares on (P^T - I) stacked over the
  // all-ones row. The minimum-norm solution picks a valid law even for
  // reducible chains.
  Eigen::MatrixXd balance(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      balance(i, j) = transition[static_cast<size_t>(j) * m + i] - (i == j ? 1.0 : 0.0);
  Eigen::MatrixXd system(m + 1, m);
  system.topRows(m) = balance;
  system.row(m).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
  rhs(m) = 1.0;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(system);
  Eigen::VectorXd law = cod.solve(rhs);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(balance);
  lu.setThreshold(1e-9);
  const bool unique = lu.rank() >= m - 1;

  StationaryLaw out;
  out.unique = unique;
  out.probabilities.resize(static_cast<size_t>(m));
  double sum = 0.0;
  for (int i = 0; i < m; ++i) {
    out.probabilities[static_cast<size_t>(i)] = std::max(0.0, law(i));
    sum += out.probabilities[static_cast<size_t>(i)];
  }
  if (!(sum > 0.0)) throw std::runtime_error("stationary law solve failed");
  for (double& v : out.probabilities) v /= sum;
  if (max_invariance_residual(out.probabilities, transition, static_cast<size_t>(m)) > 1e-7)
    throw std::runtime_error("stationary law solve did not converge");
  return out;
}

namespace {

// Chain on A^k whose step shifts the context left and appends the symbol.
std::vector<double> kgram_chain(Alphabet alphabet, std::uint64_t contexts,
                                const std::vector<double>& transition) {
  const std::uint64_t a = static_cast<std::uint64_t>(alphabet.size);
  const std::uint64_t mod = contexts / a;
  std::vector<double> chain(contexts * contexts, 0.0);
  for (std::uint64_t u = 0; u < contexts; ++u) {
    for (std::uint64_t s = 0; s < a; ++s) {
      const std::uint64_t v = (u % mod) * a + s;
      chain[u * contexts + v] += transition[u * a + s];
    }
  }
  return chain;
}

}  // namespace

StationaryLaw markov_stationary_law(Alphabet alphabet, int order,
                                    const std::vector<double>& transition) {
  if (order < 0) throw std::invalid_argument("markov order must be >= 0");
  if (order == 0) return {{1.0}, true};
  std::uint64_t contexts = 1;
  for (int i = 0; i < order; ++i) contexts *= static_cast<std::uint64_t>(alphabet.size);
  check_rows_stochastic(transition, contexts, static_cast<size_t>(alphabet.size),
                        "markov transitions");
  return stationary_distribution(kgram_chain(alphabet, contexts, transition),
                                 static_cast<int>(contexts));
}

// ---------------------------------------------------------------------------
// IIDModel

IIDModel::IIDModel(Alphabet alphabet, std::vector<double> probabilities)
    : alphabet_(alphabet), probabilities_(std::move(probabilities)) {
  check_law(probabilities_, static_cast<size_t>(alphabet_.size), "symbol distribution");
}

double IIDModel::marginal(std::span<const Symbol> word) const {
  check_symbols(word, alphabet_);
  double p = 1.0;
  for (Symbol s : word) p *= probabilities_[s];
  return p;
}

void IIDModel::sample_into(std::vector<Symbol>& out, int n, Rng& rng) const {
  for (int i = 0; i < n; ++i)
    out.push_back(static_cast<Symbol>(rng.categorical(probabilities_)));
}

std::string IIDModel::describe() const {
  std::ostringstream os;
  os << "iid(";
  for (size_t i = 0; i < probabilities_.size(); ++i) os << (i ? "," : "") << probabilities_[i];
  os << ")";
  return os.str();
}

// ---------------------------------------------------------------------------
// MarkovModel

MarkovModel::MarkovModel(Alphabet alphabet, int order, std::vector<double> transition,
                         std::optional<std::vector<double>> initial)
    : alphabet_(alphabet), order_(order), transition_(std::move(transition)) {
  if (order < 0) throw std::invalid_argument("markov order must be >= 0");
  contexts_ = 1;
  for (int i = 0; i < order; ++i) {
    contexts_ *= static_cast<std::uint64_t>(alphabet_.size);
    if (contexts_ > 1u << 20) throw std::invalid_argument("markov context space too large");
  }
  check_rows_stochastic(transition_, contexts_, static_cast<size_t>(alphabet_.size),
                        "markov transitions");
  if (order_ == 0) {
    initial_ = {1.0};
    if (initial && (initial->size() != 1 || std::abs((*initial)[0] - 1.0) > kRowSumTol))
      throw std::invalid_argument("order-0 initial law must be {1}");
    return;
  }
  const std::vector<double> chain = kgram_chain(alphabet_, contexts_, transition_);
  StationaryLaw law = stationary_distribution(chain, static_cast<int>(contexts_));
  initial_unique_ = law.unique;
  if (initial) {
    check_law(*initial, contexts_, "markov initial law");
    if (max_invariance_residual(*initial, chain, contexts_) > 1e-6)
      throw std::invalid_argument("markov initial law is not invariant");
    initial_ = std::move(*initial);
  } else {
    if (!law.unique)
      throw std::invalid_argument(
          "markov chain has several invariant laws; supply an explicit initial law");
    initial_ = std::move(law.probabilities);
  }
}

double MarkovModel::marginal(std::span<const Symbol> word) const {
  check_symbols(word, alphabet_);
  const std::uint64_t a = static_cast<std::uint64_t>(alphabet_.size);
  const int len = static_cast<int>(word.size());
  if (order_ == 0) {
    double p = 1.0;
    for (Symbol s : word) p *= transition_[s];
    return p;
  }
  if (len <= order_) {
    // Sum the k-gram law over every context extending the word.
    std::uint64_t block = 1;
    for (int i = 0; i < order_ - len; ++i) block *= a;
    const std::uint64_t first = word_rank(word, alphabet_) * block;
    double p = 0.0;
    for (std::uint64_t u = first; u < first + block; ++u) p += initial_[u];
    return p;
  }
  const std::uint64_t mod = contexts_ / a;
  std::uint64_t ctx = word_rank(word.subspan(0, static_cast<size_t>(order_)), alphabet_);
  double p = initial_[ctx];
  for (int i = order_; i < len && p > 0.0; ++i) {
    p *= transition_[ctx * a + word[static_cast<size_t>(i)]];
    ctx = (ctx % mod) * a + word[static_cast<size_t>(i)];
  }
  return p;
}

void MarkovModel::sample_into(std::vector<Symbol>& out, int n, Rng& rng) const {
  if (n == 0) return;
  const std::uint64_t a = static_cast<std::uint64_t>(alphabet_.size);
  if (order_ == 0) {
    for (int i = 0; i < n; ++i)
      out.push_back(static_cast<Symbol>(rng.categorical(transition_)));
    return;
  }
  std::uint64_t ctx = static_cast<std::uint64_t>(rng.categorical(initial_));
  std::vector<Symbol> head(static_cast<size_t>(order_));
  decode_rank(ctx, order_, alphabet_, head);
  for (int i = 0; i < std::min(n, order_); ++i) out.push_back(head[static_cast<size_t>(i)]);
  const std::uint64_t mod = contexts_ / a;
  for (int i = order_; i < n; ++i) {
    std::span<const double> row(&transition_[ctx * a], a);
    const Symbol s = static_cast<Symbol>(rng.categorical(row));
    out.push_back(s);
    ctx = (ctx % mod) * a + s;
  }
}

std::string MarkovModel::describe() const {
  std::ostringstream os;
  os << "markov(order=" << order_ << ")";
  return os.str();
}

// ---------------------------------------------------------------------------
// HMMModel

HMMModel::HMMModel(Alphabet alphabet, std::vector<double> hidden_transition,
                   std::vector<double> emission, int states,
                   std::optional<std::vector<double>> hidden_initial)
    : alphabet_(alphabet),
      states_(states),
      hidden_transition_(std::move(hidden_transition)),
      emission_(std::move(emission)) {
  if (states < 1) throw std::invalid_argument("hmm needs at least one hidden state");
  check_rows_stochastic(hidden_transition_, static_cast<size_t>(states),
                        static_cast<size_t>(states), "hidden transitions");
  check_rows_stochastic(emission_, static_cast<size_t>(states),
                        static_cast<size_t>(alphabet_.size), "emissions");
  StationaryLaw law = stationary_distribution(hidden_transition_, states);
  initial_unique_ = law.unique;
  if (hidden_initial) {
    check_law(*hidden_initial, static_cast<size_t>(states), "hidden initial law");
    if (max_invariance_residual(*hidden_initial, hidden_transition_,
                                static_cast<size_t>(states)) > 1e-6)
      throw std::invalid_argument("hidden initial law is not invariant");
    hidden_initial_ = std::move(*hidden_initial);
  } else {
    if (!law.unique)
      throw std::invalid_argument(
          "hidden chain has several invariant laws; supply an explicit initial law");
    hidden_initial_ = std::move(law.probabilities);
  }
}

double HMMModel::marginal(std::span<const Symbol> word) const {
  check_symbols(word, alphabet_);
  if (word.empty()) return 1.0;
  const int m = states_;
  const int a = alphabet_.size;
  std::vector<double> fwd(static_cast<size_t>(m)), next(static_cast<size_t>(m));
  double log_prob = 0.0;
  for (int s = 0; s < m; ++s)
    fwd[static_cast<size_t>(s)] =
        hidden_initial_[static_cast<size_t>(s)] * emission_[static_cast<size_t>(s) * a + word[0]];
  for (size_t t = 0;; ++t) {
    double scale = 0.0;
    for (double v : fwd) scale += v;
    if (scale <= 0.0) return 0.0;
    log_prob += std::log(scale);
    if (t + 1 == word.size()) break;
    for (double& v : fwd) v /= scale;
    const Symbol sym = word[t + 1];
    for (int j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int i = 0; i < m; ++i)
        acc += fwd[static_cast<size_t>(i)] * hidden_transition_[static_cast<size_t>(i) * m + j];
      next[static_cast<size_t>(j)] = acc * emission_[static_cast<size_t>(j) * a + sym];
    }
    fwd.swap(next);
  }
  return std::exp(log_prob);
}

void HMMModel::sample_into(std::vector<Symbol>& out, int n, Rng& rng) const {
  if (n == 0) return;
  const int a = alphabet_.size;
  int state = rng.categorical(hidden_initial_);
  for (int i = 0; i < n; ++i) {
    std::span<const double> emit(&emission_[static_cast<size_t>(state) * a],
                                 static_cast<size_t>(a));
    out.push_back(static_cast<Symbol>(rng.categorical(emit)));
    std::span<const double> row(&hidden_transition_[static_cast<size_t>(state) * states_],
                                static_cast<size_t>(states_));
    state = rng.categorical(row);
  }
}

std::string HMMModel::describe() const {
  std::ostringstream os;
  os << "hmm(states=" << states_ << ")";
  return os.str();
}

// ---------------------------------------------------------------------------
// MixtureModel

MixtureModel::MixtureModel(std::vector<double> weights, std::vector<ModelPtr> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (components_.empty() || weights_.size() != components_.size())
    throw std::invalid_argument("mixture needs matching weights and components");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0)) throw std::invalid_argument("mixture weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kRowSumTol)
    throw std::invalid_argument("mixture weights must sum to 1");
  for (const auto& c : components_) {
    if (!c) throw std::invalid_argument("mixture component is null");
    if (c->alphabet() != components_[0]->alphabet())
      throw std::invalid_argument("mixture components have different alphabets");
  }
}

Alphabet MixtureModel::alphabet() const { return components_[0]->alphabet(); }

double MixtureModel::marginal(std::span<const Symbol> word) const {
  double p = 0.0;
  for (size_t i = 0; i < components_.size(); ++i)
    p += weights_[i] * components_[i]->marginal(word);
  return p;
}

void MixtureModel::sample_into(std::vector<Symbol>& out, int n, Rng& rng) const {
  // One component per path: paths are draws from the ergodic decomposition.
  const int pick = rng.categorical(weights_);
  components_[static_cast<size_t>(pick)]->sample_into(out, n, rng);
}

std::string MixtureModel::describe() const {
  std::ostringstream os;
  os << "mixture(" << components_.size() << ")";
  return os.str();
}

std::vector<std::pair<double, ModelPtr>> ergodic_components(const ModelPtr& model) {
  if (!model) throw std::invalid_argument("null model");
  std::vector<std::pair<double, ModelPtr>> out;
  if (const auto* mix = dynamic_cast<const MixtureModel*>(model.get())) {
    for (size_t i = 0; i < mix->components().size(); ++i) {
      for (auto& [w, c] : ergodic_components(mix->components()[i]))
        out.emplace_back(mix->weights()[i] * w, c);
    }
  } else {
    out.emplace_back(1.0, model);
  }
  return out;
}

// ---------------------------------------------------------------------------
// RotationModel

RotationModel::RotationModel(double angle, double arc) : angle_(angle), arc_(arc) {
  if (!(angle > 0.0 && angle < 1.0)) throw std::invalid_argument("rotation angle must be in (0,1)");
  if (!(arc > 0.0 && arc < 1.0)) throw std::invalid_argument("rotation arc must be in (0,1)");
}

double RotationModel::marginal(std::span<const Symbol> word) const {
  check_symbols(word, alphabet());
  // Phases compatible with the word form a finite union of arcs; intersect
  // the shifted constraint arc for each position.
  std::vector<std::pair<double, double>> set{{0.0, 1.0}};
  std::vector<std::pair<double, double>> next;
  for (size_t i = 0; i < word.size() && !set.empty(); ++i) {
    const double lo = word[i] == 1 ? 0.0 : arc_;
    const double len = word[i] == 1 ? arc_ : 1.0 - arc_;
    double start = lo - std::fmod(static_cast<double>(i) * angle_, 1.0);
    start -= std::floor(start);
    std::pair<double, double> pieces[2];
    int npieces = 0;
    if (start + len <= 1.0) {
      pieces[npieces++] = {start, start + len};
    } else {
      pieces[npieces++] = {start, 1.0};
      pieces[npieces++] = {0.0, start + len - 1.0};
    }
    next.clear();
    for (const auto& [s, e] : set) {
      for (int p = 0; p < npieces; ++p) {
        const double lo2 = std::max(s, pieces[p].first);
        const double hi2 = std::min(e, pieces[p].second);
        if (lo2 < hi2) next.emplace_back(lo2, hi2);
      }
    }
    set.swap(next);
  }
  double measure = 0.0;
  for (const auto& [s, e] : set) measure += e - s;
  return measure;
}

void RotationModel::sample_into(std::vector<Symbol>& out, int n, Rng& rng) const {
  double phase = rng.uniform01();
  for (int i = 0; i < n; ++i) {
    out.push_back(phase < arc_ ? Symbol{1} : Symbol{0});
    phase += angle_;
    if (phase >= 1.0) phase -= 1.0;
  }
}

std::string RotationModel::describe() const {
  std::ostringstream os;
  os << "rotation(angle=" << angle_ << ",arc=" << arc_ << ")";
  return os.str();
}

}  // namespace ddtest
