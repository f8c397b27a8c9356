#include "support.hpp"

#include "priodrift/stages.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace priodrift;
using namespace priodrift::testing;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config() {
  RunConfig c;
  c.set("synth.n_projects", "2");
  c.set("synth.bugs_per_project", "250");
  c.set("synth.rapid_edit_rate", "0.05");
  c.set("synth.alias_rate", "0.05");
  c.set("forest.trees", "20");
  c.set("gbdt.rounds", "20");
  c.set("mlp.epochs", "10");
  c.set("phase1.kmeans_n_init", "2");
  c.set("crossproject.phases", "1");
  return c;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(PRIODRIFT_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("stage runner end to end") {
  const fs::path work = fs::temp_directory_path() / "priodrift_stage_test";
  fs::remove_all(work);
  std::ostringstream log;
  StageRunner runner(tiny_config(), work, log);
  runner.synth();
  runner.ingest();
  runner.featurize();
  CHECK_FALSE(runner.last_was_cached());
  runner.sample();
  runner.train();
  runner.predict(2, true);
  runner.evaluate();
  runner.granger();
  CHECK(fs::exists(runner.path("report.md")));
  CHECK(fs::exists(runner.path("report.csv")));
  CHECK(fs::exists(runner.path("granger_report.csv")));

  SUBCASE("rerunning featurize is a cache hit") {
    log.str("");
    runner.featurize();
    CHECK(runner.last_was_cached());
    CHECK(log.str().find("cache hit") != std::string::npos);
  }
  SUBCASE("masked phase 2 predictions never repeat the current priority") {
    std::ifstream in(runner.path("predictions_phase2.csv"));
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("issue_key", 0) == 0) continue;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
      REQUIRE(cells.size() >= 5);
      CHECK(cells[2] != cells[4]);  // current vs predicted
      ++rows;
    }
    CHECK(rows > 10);
  }
  SUBCASE("every output names the config hash in its header") {
    const std::string hash = runner.config().hash();
    for (const auto& entry : fs::directory_iterator(work)) {
      if (entry.path().extension() == ".stamp") continue;
      CAPTURE(entry.path().filename().string());
      if (entry.path().extension() == ".json") {
        std::ifstream in(entry.path());
        CHECK(nlohmann::json::parse(in).at("_meta").at("config_hash") == hash);
      } else {
        CHECK(first_line(entry.path()).find(hash) != std::string::npos);
      }
    }
  }
  SUBCASE("a changed semantic field invalidates the stamp") {
    RunConfig changed = tiny_config();
    changed.set("features.text_width", "32");
    CHECK(changed.hash() != runner.config().hash());
    RunConfig threads = tiny_config();
    threads.set("run.threads", "8");
    CHECK(threads.hash() == runner.config().hash());
    std::ostringstream log2;
    StageRunner other(changed, work, log2);
    other.ingest();
    CHECK_FALSE(other.last_was_cached());
  }
  SUBCASE("cross-project folds") {
    runner.crossproject();
    CHECK(fs::exists(runner.path("crossproject.csv")));
  }
  fs::remove_all(work);
}

TEST_CASE("missing artifacts are reported") {
  const fs::path work = fs::temp_directory_path() / "priodrift_stage_missing";
  fs::remove_all(work);
  std::ostringstream log;
  StageRunner runner(tiny_config(), work, log);
  try {
    runner.featurize();
    FAIL("expected MissingArtifact");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingArtifact);
    CHECK(exit_code_for(e.kind()) == 2);
  }
  fs::remove_all(work);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ErrorKind::ConfigError) == 2);
  CHECK(exit_code_for(ErrorKind::InvalidConfig) == 2);
  CHECK(exit_code_for(ErrorKind::DataError) == 3);
  CHECK(exit_code_for(ErrorKind::SchemaError) == 3);
  CHECK(exit_code_for(ErrorKind::DivergenceDetected) == 4);

  const fs::path dir = fs::temp_directory_path() / "priodrift_cli_exit";
  fs::remove_all(dir);
  fs::create_directories(dir);
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("synth --config /nonexistent.ini") == 2);
  {
    std::ofstream bad(dir / "bad.ini");
    bad << "[synth]\nn_projects = many\n";
  }
  CHECK(run_cli("synth --config " + (dir / "bad.ini").string() + " --work-dir " + (dir / "w").string()) == 2);
  CHECK(run_cli("featurize --work-dir " + (dir / "empty").string()) == 2);
  {
    std::ofstream diverge(dir / "diverge.ini");
    diverge << "[synth]\nn_projects = 2\nbugs_per_project = 150\n[mlp]\nlearning_rate = 1e300\nepochs = 3\n"
            << "[forest]\ntrees = 5\n[gbdt]\nrounds = 5\n[phase1]\nkmeans_n_init = 1\n";
  }
  const std::string base = " --config " + (dir / "diverge.ini").string() + " --work-dir " + (dir / "d").string();
  REQUIRE(run_cli("synth" + base) == 0);
  REQUIRE(run_cli("ingest" + base) == 0);
  REQUIRE(run_cli("featurize" + base) == 0);
  REQUIRE(run_cli("sample" + base) == 0);
  CHECK(run_cli("train" + base) == 4);
  fs::remove_all(dir);
}

TEST_CASE("the CLI chain matches across thread counts") {
  const fs::path dir = fs::temp_directory_path() / "priodrift_cli_threads";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "tiny.ini");
    cfg << "[synth]\nn_projects = 2\nbugs_per_project = 200\n[forest]\ntrees = 10\n[gbdt]\nrounds = 10\n"
        << "[mlp]\nepochs = 5\n[phase1]\nkmeans_n_init = 2\n";
  }
  for (const char* t : {"1", "3"}) {
    const std::string base = " --config " + (dir / "tiny.ini").string() + " --work-dir " + (dir / t).string() +
                             " --threads " + t;
    for (const char* stage : {"synth", "ingest", "featurize", "sample", "train", "evaluate"})
      REQUIRE(run_cli(stage + base) == 0);
  }
  CHECK(slurp(dir / "1" / "report.csv") == slurp(dir / "3" / "report.csv"));
  CHECK(slurp(dir / "1" / "report.md") == slurp(dir / "3" / "report.md"));
  CHECK(!slurp(dir / "1" / "report.md").empty());
  fs::remove_all(dir);
}
