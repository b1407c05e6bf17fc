#include "ddtest/testing.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "ddtest/model_io.hpp"
#include "ddtest/parallel.hpp"
#include "ddtest/rng.hpp"

namespace ddtest {

using nlohmann::json;

namespace {

json request_json(const CalibrationRequest& request) {
  return json{{"family", family_to_json(request.family)},
              {"design", design_to_json(request.design)},
              {"n", request.n},
              {"alpha", request.alpha},
              {"depth", request.depth},
              {"replicates", request.replicates},
              {"seed", request.seed}};
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace

std::string calibration_hash(const CalibrationRequest& request) {
  return hex64(fnv1a64(request_json(request).dump()));
}

CalibrationTable calibrate_threshold(const CalibrationRequest& request) {
  if (!(request.alpha > 0.0 && request.alpha < 1.0))
    throw std::invalid_argument("alpha must lie strictly between 0 and 1");
  if (request.replicates < 1) throw std::invalid_argument("need at least one replicate");
  if (request.n < 1) throw std::invalid_argument("sample length must be >= 1");
  const auto members = member_design(request.family, request.design);
  if (members.empty()) throw std::invalid_argument("empty member design");

  const int m = request.replicates;
  // Conservative order statistic: rank ceil((1-alpha)(m+1)), capped at m.
  int rank = static_cast<int>(std::ceil((1.0 - request.alpha) * (m + 1)));
  rank = std::min(rank, m);
  rank = std::max(rank, 1);

  std::vector<double> stats(members.size() * static_cast<size_t>(m));
  parallel_for(stats.size(), [&](size_t job) {
    const size_t member = job / static_cast<size_t>(m);
    const size_t rep = job % static_cast<size_t>(m);
    const std::uint64_t seed =
        derive_seed(request.seed, "calibration", member * 1'000'003ULL + rep);
    Sample x = sample_path(*members[member], request.n, seed);
    stats[job] = distance_to_family(x, request.family, request.depth).distance.value;
  });

  CalibrationTable table;
  table.member_quantiles.resize(members.size());
  for (size_t i = 0; i < members.size(); ++i) {
    auto begin = stats.begin() + static_cast<std::ptrdiff_t>(i * static_cast<size_t>(m));
    std::sort(begin, begin + m);
    table.member_quantiles[i] = *(begin + (rank - 1));
  }
  table.threshold = *std::max_element(table.member_quantiles.begin(), table.member_quantiles.end());
  table.family_spec = family_to_json(request.family);
  table.design_spec = design_to_json(request.design);
  table.n = request.n;
  table.alpha = request.alpha;
  table.depth = request.depth;
  table.replicates = m;
  table.seed = request.seed;
  table.quantile_rank = rank;
  table.quantile_rule = "order_statistic:ceil((1-alpha)*(m+1))";
  table.hash = calibration_hash(request);
  return table;
}

json table_to_json(const CalibrationTable& table) {
  return json{{"schema", "ddtest.calibration.v1"},
              {"hash", table.hash},
              {"family", table.family_spec},
              {"design", table.design_spec},
              {"n", table.n},
              {"alpha", table.alpha},
              {"depth", table.depth},
              {"replicates", table.replicates},
              {"seed", table.seed},
              {"threshold", table.threshold},
              {"quantile_rank", table.quantile_rank},
              {"quantile_rule", table.quantile_rule},
              {"member_quantiles", table.member_quantiles}};
}

CalibrationTable table_from_json(const json& j) {
  if (!j.is_object() || j.value("schema", "") != "ddtest.calibration.v1")
    throw std::invalid_argument("not a calibration table file");
  CalibrationTable t;
  t.hash = j.at("hash").get<std::string>();
  t.family_spec = j.at("family");
  t.design_spec = j.at("design");
  t.n = j.at("n").get<int>();
  t.alpha = j.at("alpha").get<double>();
  t.depth = j.at("depth").get<int>();
  t.replicates = j.at("replicates").get<int>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.threshold = j.at("threshold").get<double>();
  t.quantile_rank = j.at("quantile_rank").get<int>();
  t.quantile_rule = j.at("quantile_rule").get<std::string>();
  t.member_quantiles = j.at("member_quantiles").get<std::vector<double>>();
  return t;
}

std::string CalibrationCache::path_for(const std::string& hash) const {
  return (std::filesystem::path(directory_) / ("calibration-" + hash + ".json")).string();
}

CalibrationTable load_table_checked(const std::string& path, const CalibrationRequest& request) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open calibration table: " + path);
  json j;
  in >> j;
  CalibrationTable table = table_from_json(j);
  const std::string expected = calibration_hash(request);
  if (table.hash != expected)
    throw std::runtime_error("calibration table hash mismatch: table " + table.hash +
                             " vs request " + expected);
  return table;
}

CalibrationTable CalibrationCache::get_or_compute(const CalibrationRequest& request, bool* hit) {
  std::filesystem::create_directories(directory_);
  const std::string path = path_for(calibration_hash(request));
  if (std::filesystem::exists(path)) {
    if (hit) *hit = true;
    return load_table_checked(path, request);
  }
  if (hit) *hit = false;
  CalibrationTable table = calibrate_threshold(request);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write calibration table: " + tmp);
    out << table_to_json(table).dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
  return table;
}

TestReport threshold_test(const Sample& sample, const CalibrationTable& table,
                          const HypothesisFamily& family) {
  if (sample.length() != table.n)
    throw std::invalid_argument("sample length does not match the calibration table");
  if (family_to_json(family) != table.family_spec)
    throw std::invalid_argument("family does not match the calibration table");
  ProjectionResult projection = distance_to_family(sample, family, table.depth);
  TestReport report;
  report.test = "psi";
  report.statistic = projection.distance.value;
  report.tail_bound = projection.distance.tail_bound;
  report.threshold = table.threshold;
  report.decision = projection.distance.value > table.threshold ? 1 : 0;
  report.n = sample.length();
  report.alpha = table.alpha;
  report.witness = projection.witness ? model_to_json(*projection.witness) : json();
  return report;
}

TestReport nearest_family_test(const Sample& sample, const HypothesisFamily& h0,
                               const HypothesisFamily& h1, int depth) {
  if (h0.alphabet() != h1.alphabet())
    throw std::invalid_argument("families are over different alphabets");
  ProjectionResult p0 = distance_to_family(sample, h0, depth);
  ProjectionResult p1 = distance_to_family(sample, h1, depth);
  TestReport report;
  report.test = "phi";
  report.statistic = p0.distance.value;
  report.statistic_alt = p1.distance.value;
  report.tail_bound = p0.distance.tail_bound;
  // Strictly closer to H0 accepts; ties go to the alternative.
  report.decision = p0.distance.value < p1.distance.value ? 0 : 1;
  report.n = sample.length();
  report.witness = p0.witness ? model_to_json(*p0.witness) : json();
  report.witness_alt = p1.witness ? model_to_json(*p1.witness) : json();
  return report;
}

ConfiguredTest make_threshold_test(CalibrationTable table, HypothesisFamily family) {
  return [table = std::move(table), family = std::move(family)](const Sample& sample) {
    return threshold_test(sample, table, family).decision;
  };
}

ConfiguredTest make_nearest_family_test(HypothesisFamily h0, HypothesisFamily h1, int depth) {
  return [h0 = std::move(h0), h1 = std::move(h1), depth](const Sample& sample) {
    return nearest_family_test(sample, h0, h1, depth).decision;
  };
}

namespace {

std::uint64_t checked_sample_space(int alphabet, int n, std::uint64_t cap) {
  std::uint64_t total = 1;
  for (int i = 0; i < n; ++i) {
    if (total > cap / static_cast<std::uint64_t>(alphabet))
      throw std::invalid_argument("|A|^n exceeds the enumeration cap");
    total *= static_cast<std::uint64_t>(alphabet);
  }
  return total;
}

void decode_sample(std::uint64_t idx, int alphabet, std::vector<Symbol>& out) {
  for (size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<Symbol>(idx % static_cast<std::uint64_t>(alphabet));
    idx /= static_cast<std::uint64_t>(alphabet);
  }
}

}  // namespace

double exact_rejection_probability(const ConfiguredTest& test, const ProcessModel& model, int n,
                                   std::uint64_t cap) {
  if (n < 1) throw std::invalid_argument("sample length must be >= 1");
  const int a = model.alphabet().size;
  const std::uint64_t total = checked_sample_space(a, n, cap);
  // Fixed chunking keeps the floating-point reduction order independent of
  // the worker count.
  const std::uint64_t chunks = std::min<std::uint64_t>(total, 256);
  std::vector<double> partial(chunks, 0.0);
  parallel_for(chunks, [&](size_t chunk) {
    const std::uint64_t begin = total * chunk / chunks;
    const std::uint64_t end = total * (chunk + 1) / chunks;
    Sample sample(model.alphabet(), std::vector<Symbol>(static_cast<size_t>(n), 0));
    double acc = 0.0;
    for (std::uint64_t idx = begin; idx < end; ++idx) {
      decode_sample(idx, a, sample.mutable_symbols());
      const double p = model.marginal(sample.symbols());
      if (p == 0.0) continue;
      if (test(sample) == 1) acc += p;
    }
    partial[chunk] = acc;
  });
  double out = 0.0;
  for (double p : partial) out += p;
  return out;
}

double monte_carlo_rejection_rate(const ConfiguredTest& test, const ProcessModel& model, int n,
                                  int replicates, std::uint64_t seed) {
  if (replicates < 1) throw std::invalid_argument("need at least one replicate");
  std::vector<int> rejected(static_cast<size_t>(replicates), 0);
  parallel_for(static_cast<size_t>(replicates), [&](size_t i) {
    Sample x = sample_path(model, n, derive_seed(seed, "mc-rejection", i));
    rejected[i] = test(x);
  });
  std::uint64_t count = 0;
  for (int r : rejected) count += static_cast<std::uint64_t>(r);
  return static_cast<double>(count) / static_cast<double>(replicates);
}

namespace {

struct StatLaw {
  std::vector<double> stats;   // sorted ascending
  std::vector<double> prefix;  // prefix[i] = P(stat <= stats[i-1]) cumulative
  double total = 0.0;

  double prob_at_least(double t) const {
    const auto it = std::lower_bound(stats.begin(), stats.end(), t);
    const size_t i = static_cast<size_t>(it - stats.begin());
    return total - prefix[i];
  }
  double prob_at_most(double t) const {
    const auto it = std::upper_bound(stats.begin(), stats.end(), t);
    const size_t i = static_cast<size_t>(it - stats.begin());
    return prefix[i];
  }
};

StatLaw statistic_law(const ProcessModel& model, const HypothesisFamily& family, int n, int depth,
                      std::uint64_t cap) {
  const int a = model.alphabet().size;
  const std::uint64_t total = checked_sample_space(a, n, cap);
  std::vector<std::pair<double, double>> pairs(total);  // (statistic, probability)
  const std::uint64_t chunks = std::min<std::uint64_t>(total, 256);
  parallel_for(chunks, [&](size_t chunk) {
    const std::uint64_t begin = total * chunk / chunks;
    const std::uint64_t end = total * (chunk + 1) / chunks;
    Sample sample(model.alphabet(), std::vector<Symbol>(static_cast<size_t>(n), 0));
    for (std::uint64_t idx = begin; idx < end; ++idx) {
      decode_sample(idx, a, sample.mutable_symbols());
      const double p = model.marginal(sample.symbols());
      const double stat = distance_to_family(sample, family, depth).distance.value;
      pairs[idx] = {stat, p};
    }
  });
  std::sort(pairs.begin(), pairs.end());
  StatLaw law;
  law.stats.resize(pairs.size());
  law.prefix.resize(pairs.size() + 1, 0.0);
  for (size_t i = 0; i < pairs.size(); ++i) {
    law.stats[i] = pairs[i].first;
    law.prefix[i + 1] = law.prefix[i] + pairs[i].second;
  }
  law.total = law.prefix[pairs.size()];
  return law;
}

}  // namespace

std::vector<SmoothingRow> verify_smoothing_bounds(const ProcessModel& model,
                                                  const HypothesisFamily& family, int m, int k,
                                                  const std::vector<double>& eps_grid, int depth,
                                                  std::uint64_t cap) {
  if (!(m > 2 * k && 2 * k > 1))
    throw std::invalid_argument("smoothing bounds need m > 2k > 1");
  if (model.alphabet() != family.alphabet())
    throw std::invalid_argument("model and family alphabets differ");
  const StatLaw long_law = statistic_law(model, family, m, depth, cap);
  const StatLaw short_law = statistic_law(model, family, k, depth, cap);

  const double shift = 2.0 * k / static_cast<double>(m - k + 1);
  const double stretch = static_cast<double>(m) / static_cast<double>(m - k + 1);
  // Weight of words longer than k among those the truncated statistic sums.
  const double t_k = std::max(0.0, tail_weight(k, model.alphabet()) -
                                       tail_weight(depth, model.alphabet()));
  constexpr double kSlack = 1e-12;  // double rounding in the probability sums

  std::vector<SmoothingRow> rows;
  rows.reserve(eps_grid.size() * 2);
  for (double eps : eps_grid) {
    SmoothingRow dev;
    dev.equation = 2;
    dev.epsilon = eps;
    dev.lhs = long_law.prob_at_least(eps);
    dev.rhs = short_law.prob_at_least(eps - shift - t_k);
    dev.holds = dev.lhs <= dev.rhs + kSlack;
    rows.push_back(dev);

    SmoothingRow conc;
    conc.equation = 3;
    conc.epsilon = eps;
    conc.lhs = long_law.prob_at_most(eps);
    conc.rhs = short_law.prob_at_most(stretch * eps + shift);
    conc.holds = conc.lhs <= conc.rhs + kSlack;
    rows.push_back(conc);
  }
  return rows;
}

json report_to_json(const TestReport& report) {
  json out{{"test", report.test},
           {"decision", report.decision},
           {"statistic", report.statistic},
           {"tail_bound", report.tail_bound},
           {"n", report.n}};
  if (report.test == "psi") {
    out["threshold"] = report.threshold;
    out["alpha"] = report.alpha;
    out["witness"] = report.witness;
  } else {
    out["statistic_h1"] = report.statistic_alt;
    out["witness_h0"] = report.witness;
    out["witness_h1"] = report.witness_alt;
  }
  return out;
}

}  // namespace ddtest
