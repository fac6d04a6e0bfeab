#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "opensense/cli.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"opensense"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return opensense::run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& file = "") const { return (path / file).string(); }
};

}  // namespace

TEST_CASE("gen-trace writes a deterministic trace CSV") {
  TempDir a("opensense_cli_gen_a"), b("opensense_cli_gen_b"), c("opensense_cli_gen_c");
  CHECK(run({"--seed", "5", "--out", a.str(), "gen-trace", "--length", "500"}) == 0);
  CHECK(run({"--seed", "5", "--out", b.str(), "gen-trace", "--length", "500"}) == 0);
  CHECK(run({"--seed", "6", "--out", c.str(), "gen-trace", "--length", "500"}) == 0);

  const auto ta = slurp(a.path / "trace.csv");
  CHECK(ta == slurp(b.path / "trace.csv"));
  CHECK(ta != slurp(c.path / "trace.csv"));
  CHECK(line_count(ta) == 501);  // header + one row per second
  CHECK(ta.rfind("t,class_id\n", 0) == 0);
}

TEST_CASE("gen-trace rejects a non-positive length and unknown profiles") {
  TempDir dir("opensense_cli_gen_bad");
  CHECK(run({"--out", dir.str(), "gen-trace", "--length", "0"}) != 0);
  CHECK(run({"--out", dir.str(), "gen-trace", "--profile", "garage"}) != 0);
}

TEST_CASE("the toolkit pipeline runs end to end") {
  TempDir dir("opensense_cli_pipeline");
  REQUIRE(run({"--seed", "3", "--out", dir.str(), "gen-trace", "--length", "1200"}) == 0);
  const auto trace = dir.str("trace.csv");

  REQUIRE(run({"--seed", "3", "--out", dir.str(), "train-qlbs", "--trace", trace,
               "--episodes", "40", "--amax", "20"}) == 0);
  CHECK(fs::exists(dir.path / "qtable.txt"));
  const auto curve = slurp(dir.path / "training_curve.csv");
  CHECK(line_count(curve) == 41);  // header + one row per episode
  CHECK(curve.rfind("episode,avg_penalty\n", 0) == 0);

  REQUIRE(run({"--out", dir.str(), "simulate", "--trace", trace, "--policy", "clpa"}) == 0);
  CHECK(fs::exists(dir.path / "metrics.csv"));
  CHECK(fs::exists(dir.path / "transitions.csv"));
  const auto single = slurp(dir.path / "metrics.csv");
  CHECK(line_count(single) == 2);

  REQUIRE(run({"--out", dir.str(), "compare", "--trace", trace, "--policies",
               "fixed:1,min,clpa,qlbs", "--qtable", dir.str("qtable.txt")}) == 0);
  const auto metrics = slurp(dir.path / "metrics.csv");
  CHECK(line_count(metrics) == 5);
  CHECK(metrics.rfind("policy,transmissions,normalized_ble,cl_misses,missed_events,"
                      "total_latency\n", 0) == 0);
  // fixed(1) wakes every second of the 1200 s trace.
  CHECK(metrics.find("fixed(1),1200,1,0,0,0\n") != std::string::npos);
}

TEST_CASE("simulate validates its policy arguments") {
  TempDir dir("opensense_cli_sim_bad");
  REQUIRE(run({"--out", dir.str(), "gen-trace", "--length", "100"}) == 0);
  const auto trace = dir.str("trace.csv");
  CHECK(run({"--out", dir.str(), "simulate", "--trace", trace, "--policy", "bogus"}) == 2);
  CHECK(run({"--out", dir.str(), "simulate", "--trace", trace, "--policy", "qlbs"}) == 2);
  CHECK(run({"--out", dir.str(), "simulate", "--trace", trace, "--policy", "fixed:0"}) == 2);
  CHECK(run({"--out", dir.str(), "simulate", "--trace", dir.str("missing.csv")}) == 1);
  CHECK(run({"--out", dir.str(), "compare", "--trace", trace, "--policies", "clpa"}) == 1);
}

TEST_CASE("openworld writes one row per increment") {
  TempDir dir("opensense_cli_ow");
  REQUIRE(run({"--seed", "2", "--out", dir.str(), "openworld", "--known", "3", "--batches",
               "1", "--per-batch", "2", "--train-n", "30", "--test-n", "15"}) == 0);
  const auto owm = slurp(dir.path / "owm.csv");
  CHECK(line_count(owm) == 3);  // header + increments 0 and 1
  CHECK(owm.rfind("increment,n_kk,n_ku,n_uk,n_uu,acc_known,b3_unknown,owm,"
                  "discovered_classes\n", 0) == 0);

  TempDir again("opensense_cli_ow2");
  REQUIRE(run({"--seed", "2", "--out", again.str(), "openworld", "--known", "3", "--batches",
               "1", "--per-batch", "2", "--train-n", "30", "--test-n", "15"}) == 0);
  CHECK(owm == slurp(again.path / "owm.csv"));
}

TEST_CASE("update-exp logs the idle-window drain") {
  TempDir dir("opensense_cli_upd");
  REQUIRE(run({"--out", dir.str(), "update-exp", "--queue", "4", "--tmin", "31",
               "--period", "33"}) == 0);
  const auto log = slurp(dir.path / "update_log.csv");
  CHECK(line_count(log) == 5);  // header + 4 windows of one sample each
  CHECK(log.find("0,classifier,1,3,fail\n") != std::string::npos);
  CHECK(log.find("99,classifier,1,0,success\n") != std::string::npos);
}

TEST_CASE("a subcommand is required") {
  CHECK(run({}) != 0);
  CHECK(run({"no-such-command"}) != 0);
}
