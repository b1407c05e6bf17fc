// ddtest: distributional-distance goodness-of-fit testing for stationary
// processes. Subcommands read a JSON config; reports go to stdout as JSON
// with a one-line summary on stderr. Exit codes: 0 success, 1 domain error,
// 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "ddtest/harness.hpp"
#include "ddtest/model_io.hpp"
#include "ddtest/parallel.hpp"
#include "ddtest/testing.hpp"

using nlohmann::json;
using namespace ddtest;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  int threads = 0;
};

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open config file: " + path);
  json config;
  try {
    in >> config;
  } catch (const json::exception& e) {
    throw CLI::ValidationError("--config", "config is not valid JSON: " + std::string(e.what()));
  }
  if (!config.is_object()) throw CLI::ValidationError("--config", "config must be a JSON object");
  return config;
}

// All-or-nothing file writes: stage to a sibling temp file, then rename.
void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + tmp);
    out << content;
    if (!out) throw std::runtime_error("failed writing output file: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::uint64_t master_seed(const json& config, const CommonArgs& args) {
  if (args.seed) return *args.seed;
  return config.value("seed", std::uint64_t{1});
}

std::string output_path(const json& config, const CommonArgs& args, bool required) {
  if (args.output) return *args.output;
  if (config.contains("output")) return config["output"].get<std::string>();
  if (required) throw std::invalid_argument("no output path: pass --output or set \"output\"");
  return {};
}

Sample load_one_sample(const json& config, Alphabet alphabet) {
  if (!config.contains("sample")) throw std::invalid_argument("config needs a \"sample\" file path");
  const std::string path = config["sample"].get<std::string>();
  auto samples = read_sample_file(path, alphabet);
  const size_t index = config.value("sample_index", size_t{0});
  if (index >= samples.size())
    throw std::invalid_argument("sample_index " + std::to_string(index) + " out of range for " +
                                path);
  return samples[index];
}

void emit(const json& report, const std::string& summary) {
  std::cout << report.dump(2) << '\n';
  std::cerr << summary << '\n';
}

int run_simulate(const json& config, const CommonArgs& args) {
  ModelPtr model = model_from_json(config.at("model"));
  const int n = config.at("n").get<int>();
  const int count = config.value("count", 1);
  if (n < 0 || count < 1) throw std::invalid_argument("simulate needs n >= 0 and count >= 1");
  const std::uint64_t seed = master_seed(config, args);
  const std::string out_path = output_path(config, args, true);
  std::vector<Sample> samples;
  samples.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i)
    samples.push_back(sample_path(*model, n, derive_seed(seed, "simulate", i)));
  std::string text;
  for (const Sample& s : samples) {
    text += s.str();
    text += '\n';
  }
  write_file_atomic(out_path, text);
  emit(json{{"command", "simulate"},
            {"model", model->describe()},
            {"n", n},
            {"count", count},
            {"seed", seed},
            {"output", out_path}},
       "simulate: wrote " + std::to_string(count) + " sample(s) of length " + std::to_string(n) +
           " to " + out_path);
  return 0;
}

int run_distance(const json& config, const CommonArgs& args) {
  ModelPtr model = model_from_json(config.at("model"));
  const int depth = config.value("depth", 8);
  Sample sample = load_one_sample(config, model->alphabet());
  const TruncatedDistance d = empirical_distance(sample, *model, depth);
  (void)args;
  emit(json{{"command", "distance"},
            {"model", model->describe()},
            {"n", sample.length()},
            {"depth", d.depth},
            {"value", d.value},
            {"tail_bound", d.tail_bound}},
       "distance: " + std::to_string(d.value) + " (+tail <= " + std::to_string(d.tail_bound) +
           ") at depth " + std::to_string(d.depth));
  return 0;
}

CalibrationRequest request_from_config(const json& config, const CommonArgs& args) {
  CalibrationRequest request{family_from_json(config.at("family")),
                             design_from_json(config.value("design", json::object())),
                             config.at("n").get<int>(),
                             config.at("alpha").get<double>(),
                             config.value("depth", 8),
                             config.value("replicates", 200),
                             master_seed(config, args)};
  return request;
}

int run_calibrate(const json& config, const CommonArgs& args) {
  CalibrationRequest request = request_from_config(config, args);
  bool hit = false;
  CalibrationTable table;
  if (config.contains("cache_dir")) {
    CalibrationCache cache(config["cache_dir"].get<std::string>());
    table = cache.get_or_compute(request, &hit);
  } else {
    table = calibrate_threshold(request);
  }
  json report = table_to_json(table);
  report["cache_hit"] = hit;
  const std::string out_path = output_path(config, args, false);
  if (!out_path.empty()) write_file_atomic(out_path, table_to_json(table).dump(2) + "\n");
  emit(report, "calibrate: threshold " + std::to_string(table.threshold) + " (n=" +
                   std::to_string(table.n) + ", alpha=" + std::to_string(table.alpha) +
                   (hit ? ", cache hit)" : ")"));
  return 0;
}

int run_test_psi(const json& config, const CommonArgs& args) {
  HypothesisFamily family = family_from_json(config.at("family"));
  Sample sample = load_one_sample(config, family.alphabet());
  CalibrationTable table;
  if (config.contains("table")) {
    std::ifstream in(config["table"].get<std::string>());
    if (!in)
      throw std::invalid_argument("cannot open calibration table: " +
                                  config["table"].get<std::string>());
    json j;
    in >> j;
    table = table_from_json(j);
  } else if (config.contains("calibration")) {
    json calib = config["calibration"];
    calib["family"] = config.at("family");
    if (!calib.contains("n")) calib["n"] = sample.length();
    if (!calib.contains("seed")) calib["seed"] = master_seed(config, args);
    CommonArgs no_override = args;
    no_override.seed.reset();
    CalibrationRequest request = request_from_config(calib, no_override);
    if (calib.contains("cache_dir")) {
      CalibrationCache cache(calib["cache_dir"].get<std::string>());
      table = cache.get_or_compute(request);
    } else {
      table = calibrate_threshold(request);
    }
  } else {
    throw std::invalid_argument("test-psi needs a \"table\" path or a \"calibration\" block");
  }
  TestReport report = threshold_test(sample, table, family);
  emit(report_to_json(report),
       "test-psi: decision " + std::to_string(report.decision) + " (statistic " +
           std::to_string(report.statistic) + " vs threshold " +
           std::to_string(report.threshold) + ")");
  return 0;
}

int run_test_phi(const json& config, const CommonArgs&) {
  HypothesisFamily h0 = family_from_json(config.at("h0"));
  HypothesisFamily h1 = family_from_json(config.at("h1"));
  const int depth = config.value("depth", 8);
  Sample sample = load_one_sample(config, h0.alphabet());
  TestReport report = nearest_family_test(sample, h0, h1, depth);
  emit(report_to_json(report),
       "test-phi: decision " + std::to_string(report.decision) + " (d0 " +
           std::to_string(report.statistic) + ", d1 " + std::to_string(report.statistic_alt) +
           ")");
  return 0;
}

int run_verify_lemma2(const json& config, const CommonArgs& args) {
  ModelPtr model = model_from_json(config.at("model"));
  HypothesisFamily family = family_from_json(config.at("family"));
  const int m = config.at("m").get<int>();
  const int k = config.at("k").get<int>();
  const int depth = config.value("depth", 6);
  std::vector<double> grid;
  if (config.contains("eps_list")) {
    grid = config["eps_list"].get<std::vector<double>>();
  } else {
    const json eps = config.value("eps", json{{"start", 0.0}, {"stop", 1.0}, {"step", 0.02}});
    const double start = eps.value("start", 0.0);
    const double stop = eps.value("stop", 1.0);
    const double step = eps.value("step", 0.02);
    if (step <= 0.0) throw std::invalid_argument("eps.step must be positive");
    for (double e = start; e <= stop + 1e-12; e += step) grid.push_back(e);
  }
  auto rows = verify_smoothing_bounds(*model, family, m, k, grid, depth);
  int violations = 0;
  json jrows = json::array();
  std::string csv = "equation,epsilon,lhs,rhs,holds\n";
  for (const auto& row : rows) {
    if (!row.holds) ++violations;
    jrows.push_back(json{{"equation", row.equation},
                         {"epsilon", row.epsilon},
                         {"lhs", row.lhs},
                         {"rhs", row.rhs},
                         {"holds", row.holds}});
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%d\n", row.equation, row.epsilon,
                  row.lhs, row.rhs, row.holds ? 1 : 0);
    csv += buf;
  }
  const std::string out_path = output_path(config, args, false);
  if (!out_path.empty()) write_file_atomic(out_path, csv);
  emit(json{{"command", "verify-lemma2"},
            {"m", m},
            {"k", k},
            {"depth", depth},
            {"rows", jrows},
            {"violations", violations}},
       "verify-lemma2: " + std::to_string(rows.size()) + " rows, " +
           std::to_string(violations) + " violation(s)");
  return violations == 0 ? 0 : 1;
}

std::vector<LabeledModel> models_from_config(const json& spec) {
  std::vector<LabeledModel> out;
  for (const auto& entry : spec) {
    out.push_back({entry.at("id").get<std::string>(), model_from_json(entry.at("model"))});
  }
  return out;
}

int run_experiment(const json& config, const CommonArgs& args) {
  const std::string kind = config.value("kind", "error_curve");
  const std::string out_path = output_path(config, args, true);
  std::unique_ptr<CalibrationCache> cache;
  if (config.contains("cache_dir"))
    cache = std::make_unique<CalibrationCache>(config["cache_dir"].get<std::string>());

  if (kind == "error_curve") {
    ErrorCurvePlan plan;
    plan.test = config.value("test", "psi");
    plan.h0 = family_from_json(config.at("h0"));
    if (config.contains("h1")) plan.h1 = family_from_json(config["h1"]);
    plan.models = models_from_config(config.at("models"));
    plan.n_grid = config.at("n_grid").get<std::vector<int>>();
    if (config.contains("alpha_grid"))
      plan.alpha_grid = config["alpha_grid"].get<std::vector<double>>();
    plan.replicates = config.value("replicates", 200);
    plan.depth = config.value("depth", 8);
    plan.design = design_from_json(config.value("design", json::object()));
    plan.calibration_replicates = config.value("calibration_replicates", 200);
    plan.seed = master_seed(config, args);
    auto rows = error_curve(plan, cache.get());
    write_file_atomic(out_path, error_curve_csv(rows));
    emit(json{{"command", "experiment"},
              {"kind", kind},
              {"rows", rows.size()},
              {"output", out_path}},
         "experiment: wrote " + std::to_string(rows.size()) + " rows to " + out_path);
    return 0;
  }
  if (kind == "convergence") {
    ModelPtr rho = model_from_json(config.at("rho"));
    ModelPtr xi = model_from_json(config.at("xi"));
    const auto n_grid = config.at("n_grid").get<std::vector<int>>();
    const int depth = config.value("depth", 6);
    std::vector<std::uint64_t> seeds;
    if (config.contains("seeds"))
      seeds = config["seeds"].get<std::vector<std::uint64_t>>();
    else
      seeds.push_back(master_seed(config, args));
    std::vector<ConvergenceRow> rows;
    for (std::uint64_t seed : seeds) {
      auto part = convergence_experiment(*rho, *xi, n_grid, depth, seed);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    write_file_atomic(out_path, convergence_csv(rows));
    emit(json{{"command", "experiment"},
              {"kind", kind},
              {"rows", rows.size()},
              {"output", out_path}},
         "experiment: wrote " + std::to_string(rows.size()) + " rows to " + out_path);
    return 0;
  }
  if (kind == "trajectory") {
    TrajectoryPlan plan;
    plan.h0 = family_from_json(config.at("h0"));
    plan.model = model_from_json(config.at("model"));
    plan.checkpoints = config.at("checkpoints").get<std::vector<int>>();
    plan.alpha = config.value("alpha", 0.05);
    plan.paths = config.value("paths", 100);
    plan.depth = config.value("depth", 8);
    plan.design = design_from_json(config.value("design", json::object()));
    plan.calibration_replicates = config.value("calibration_replicates", 200);
    plan.seed = master_seed(config, args);
    auto rows = trajectory_experiment(plan, cache.get());
    std::string csv = "n,rejecting_paths,paths\n";
    for (const auto& r : rows)
      csv += std::to_string(r.n) + "," + std::to_string(r.rejecting_paths) + "," +
             std::to_string(r.paths) + "\n";
    write_file_atomic(out_path, csv);
    emit(json{{"command", "experiment"},
              {"kind", kind},
              {"rows", rows.size()},
              {"output", out_path}},
         "experiment: wrote " + std::to_string(rows.size()) + " rows to " + out_path);
    return 0;
  }
  throw std::invalid_argument("unknown experiment kind \"" + kind + "\"");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributional-distance hypothesis tests for stationary processes"};
  app.require_subcommand(1);

  struct Sub {
    std::string name;
    std::string help;
    int (*run)(const json&, const CommonArgs&);
  };
  const std::vector<Sub> subs{
      {"simulate", "sample paths from a process model into a sample file", run_simulate},
      {"distance", "empirical distance between a sample and a model", run_distance},
      {"calibrate", "Monte Carlo threshold for a hypothesis family", run_calibrate},
      {"test-psi", "level-alpha goodness-of-fit test against a family", run_test_psi},
      {"test-phi", "nearest-family test between two families", run_test_phi},
      {"verify-lemma2", "exhaustive check of the deviation-smoothing bounds", run_verify_lemma2},
      {"experiment", "error-curve / convergence / trajectory experiments", run_experiment},
  };

  std::vector<std::pair<const Sub*, CommonArgs>> argsets(subs.size());
  for (size_t i = 0; i < subs.size(); ++i) {
    CLI::App* sub = app.add_subcommand(subs[i].name, subs[i].help);
    argsets[i].first = &subs[i];
    CommonArgs& common = argsets[i].second;
    sub->add_option("--config", common.config_path, "JSON config file")->required();
    sub->add_option("--seed", [&common](const CLI::results_t& res) {
      common.seed = std::stoull(res[0]);
      return true;
    }, "master seed override");
    sub->add_option("--output", [&common](const CLI::results_t& res) {
      common.output = res[0];
      return true;
    }, "output path override");
    sub->add_option("--threads", common.threads, "worker thread cap (0 = all cores)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  for (size_t i = 0; i < subs.size(); ++i) {
    if (!app.get_subcommand(subs[i].name)->parsed()) continue;
    const CommonArgs& common = argsets[i].second;
    set_max_threads(common.threads);
    try {
      const json config = load_config(common.config_path);
      return argsets[i].first->run(config, common);
    } catch (const CLI::ValidationError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    } catch (const json::exception& e) {
      std::cerr << "error: config schema violation: " << e.what() << '\n';
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 2;
}
