#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ddtest/sample.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Path to the ddtest binary, passed as the test's first argument.
std::string& binary_path() {
  static std::string path;
  return path;
}

struct RunResult {
  int status = -1;
  std::string stdout_text;
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const std::string cmd = binary_path() + " " + args + " > " + out.string() + " 2> " +
                          (dir / "stderr.txt").string();
  const int raw = std::system(cmd.c_str());
  RunResult result;
  result.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  result.stdout_text = ss.str();
  return result;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ddtest-cli-" + std::to_string(::getpid()) + "-" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  fs::path file(const std::string& name, const json& content) const {
    const fs::path p = path / name;
    std::ofstream out(p);
    out << content.dump(2);
    return p;
  }
};

json all_zero_chain_json() {
  return json{{"kind", "markov"},
              {"alphabet_size", 2},
              {"order", 1},
              {"transitions", json::array({json::array({1.0, 0.0}), json::array({1.0, 0.0})})}};
}

json read_file_json(const fs::path& p) {
  std::ifstream in(p);
  json j;
  in >> j;
  return j;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <path-to-ddtest-binary>\n");
    return 2;
  }
  binary_path() = argv[argc - 1];
  doctest::Context context;
  context.applyCommandLine(argc - 1, argv);
  return context.run();
}

TEST_CASE("simulate writes the degenerate path and matching report") {
  TempDir dir;
  const fs::path config = dir.file("sim.json", json{{"model", all_zero_chain_json()},
                                                    {"n", 5},
                                                    {"seed", 3},
                                                    {"output", (dir.path / "samples.txt").string()}});
  auto result = run_cli("simulate --config " + config.string(), dir.path);
  REQUIRE(result.status == 0);
  CHECK(read_file(dir.path / "samples.txt") == "00000\n");
  const json report = json::parse(result.stdout_text);
  CHECK(report["command"] == "simulate");
  CHECK(report["n"] == 5);
}

TEST_CASE("distance reports the statistic with its tail bound") {
  TempDir dir;
  std::ofstream(dir.path / "x.txt") << "0101\n";
  const fs::path config = dir.file(
      "dist.json",
      json{{"model", json{{"kind", "iid"}, {"alphabet_size", 2}, {"probs", {0.5, 0.5}}}},
           {"sample", (dir.path / "x.txt").string()},
           {"depth", 2}});
  auto result = run_cli("distance --config " + config.string(), dir.path);
  REQUIRE(result.status == 0);
  const json report = json::parse(result.stdout_text);
  CHECK(report["depth"] == 2);
  CHECK(report["value"].get<double>() >= 0.0);
  CHECK(report["tail_bound"].get<double>() ==
        ddtest::tail_weight(2, ddtest::Alphabet(2)));
}

TEST_CASE("calibrate twice hits the cache with an identical table") {
  TempDir dir;
  const json config_body{{"family", json{{"kind", "singleton"}, {"model", all_zero_chain_json()}}},
                         {"n", 6},
                         {"alpha", 0.1},
                         {"depth", 4},
                         {"replicates", 20},
                         {"seed", 5},
                         {"cache_dir", (dir.path / "cache").string()}};
  const fs::path config = dir.file("calib.json", config_body);
  auto first = run_cli("calibrate --config " + config.string(), dir.path);
  REQUIRE(first.status == 0);
  const json table1 = json::parse(first.stdout_text);
  CHECK(table1["cache_hit"] == false);
  CHECK(table1["threshold"] == 0.0);

  auto second = run_cli("calibrate --config " + config.string(), dir.path);
  REQUIRE(second.status == 0);
  json table2 = json::parse(second.stdout_text);
  CHECK(table2["cache_hit"] == true);
  table2.erase("cache_hit");
  json stripped = table1;
  stripped.erase("cache_hit");
  CHECK(table2 == stripped);
}

TEST_CASE("test-psi rejects a sample off the null support") {
  TempDir dir;
  std::ofstream(dir.path / "x.txt") << "00010\n";
  const fs::path config = dir.file(
      "psi.json",
      json{{"family", json{{"kind", "singleton"}, {"model", all_zero_chain_json()}}},
           {"sample", (dir.path / "x.txt").string()},
           {"calibration",
            json{{"alpha", 0.1}, {"depth", 4}, {"replicates", 20}, {"seed", 5}}}});
  auto result = run_cli("test-psi --config " + config.string(), dir.path);
  REQUIRE(result.status == 0);
  const json report = json::parse(result.stdout_text);
  CHECK(report["test"] == "psi");
  CHECK(report["decision"] == 1);
  CHECK(report["statistic"].get<double>() > 0.0);
}

TEST_CASE("test-phi picks the nearer family") {
  TempDir dir;
  std::ofstream(dir.path / "x.txt") << "0000\n";
  const json h0{{"kind", "singleton"}, {"model", all_zero_chain_json()}};
  json one = all_zero_chain_json();
  one["transitions"] = json::array({json::array({0.0, 1.0}), json::array({0.0, 1.0})});
  const json h1{{"kind", "singleton"}, {"model", one}};
  const fs::path config = dir.file("phi.json", json{{"h0", h0},
                                                    {"h1", h1},
                                                    {"depth", 3},
                                                    {"sample", (dir.path / "x.txt").string()}});
  auto result = run_cli("test-phi --config " + config.string(), dir.path);
  REQUIRE(result.status == 0);
  const json report = json::parse(result.stdout_text);
  CHECK(report["decision"] == 0);
}

TEST_CASE("verify-lemma2 reports zero violations on a small fixture") {
  TempDir dir;
  const fs::path config = dir.file(
      "lemma.json",
      json{{"model", json{{"kind", "iid"}, {"alphabet_size", 2}, {"probs", {0.7, 0.3}}}},
           {"family", json{{"kind", "singleton"},
                           {"model",
                            json{{"kind", "iid"}, {"alphabet_size", 2}, {"probs", {0.5, 0.5}}}}}},
           {"m", 7},
           {"k", 2},
           {"depth", 4},
           {"eps", json{{"start", 0.0}, {"stop", 1.0}, {"step", 0.1}}},
           {"output", (dir.path / "rows.csv").string()}});
  auto result = run_cli("verify-lemma2 --config " + config.string(), dir.path);
  REQUIRE(result.status == 0);
  const json report = json::parse(result.stdout_text);
  CHECK(report["violations"] == 0);
  const std::string csv = read_file(dir.path / "rows.csv");
  CHECK(csv.rfind("equation,epsilon,lhs,rhs,holds", 0) == 0);
}

TEST_CASE("experiment writes a deterministic csv") {
  TempDir dir;
  const json iid05{{"kind", "iid"}, {"alphabet_size", 2}, {"probs", {0.5, 0.5}}};
  const json iid01{{"kind", "iid"}, {"alphabet_size", 2}, {"probs", {0.9, 0.1}}};
  const json config_body{
      {"kind", "error_curve"},
      {"test", "psi"},
      {"h0", json{{"kind", "singleton"}, {"model", iid05}}},
      {"models", json::array({json{{"id", "null"}, {"model", iid05}},
                              json{{"id", "alt"}, {"model", iid01}}})},
      {"n_grid", {20, 80}},
      {"alpha_grid", {0.1}},
      {"replicates", 50},
      {"depth", 4},
      {"calibration_replicates", 100},
      {"seed", 9},
      {"output", (dir.path / "curve.csv").string()}};
  const fs::path config = dir.file("exp.json", config_body);
  auto result = run_cli("experiment --config " + config.string(), dir.path);
  REQUIRE(result.status == 0);
  const std::string csv1 = read_file(dir.path / "curve.csv");
  CHECK(csv1.rfind("test,n,alpha,model_id,replicates,reject_rate,std_err,seed", 0) == 0);
  CHECK(std::count(csv1.begin(), csv1.end(), '\n') == 5);  // header + 4 rows

  auto rerun = run_cli("experiment --config " + config.string(), dir.path);
  REQUIRE(rerun.status == 0);
  CHECK(read_file(dir.path / "curve.csv") == csv1);
}

TEST_CASE("error handling: exit codes and no partial outputs") {
  TempDir dir;
  SUBCASE("unknown flag is a usage error") {
    auto result = run_cli("simulate --bogus", dir.path);
    CHECK(result.status == 2);
  }
  SUBCASE("missing config file is a usage error") {
    auto result = run_cli("simulate --config " + (dir.path / "nope.json").string(), dir.path);
    CHECK(result.status == 2);
  }
  SUBCASE("bad alpha is a domain error") {
    const fs::path config = dir.file(
        "bad.json",
        json{{"family", json{{"kind", "singleton"}, {"model", all_zero_chain_json()}}},
             {"n", 6},
             {"alpha", 1.5},
             {"replicates", 10}});
    auto result = run_cli("calibrate --config " + config.string(), dir.path);
    CHECK(result.status == 1);
  }
  SUBCASE("missing sample file is a domain error") {
    const fs::path config = dir.file(
        "psi.json",
        json{{"family", json{{"kind", "singleton"}, {"model", all_zero_chain_json()}}},
             {"sample", (dir.path / "missing.txt").string()},
             {"calibration", json{{"alpha", 0.1}, {"replicates", 10}}}});
    auto result = run_cli("test-psi --config " + config.string(), dir.path);
    CHECK(result.status == 1);
  }
  SUBCASE("invalid experiment config leaves no output behind") {
    const fs::path out = dir.path / "never.csv";
    const fs::path config = dir.file("exp.json", json{{"kind", "error_curve"},
                                                      {"h0", json{{"kind", "nope"}}},
                                                      {"output", out.string()}});
    auto result = run_cli("experiment --config " + config.string(), dir.path);
    CHECK(result.status == 1);
    CHECK_FALSE(fs::exists(out));
  }
}
