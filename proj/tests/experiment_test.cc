#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <sys/wait.h>

#include "prefcon/experiment.h"
#include "prefcon/io.h"

using namespace prefcon;
namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"({
  "name": "small",
  "world": "pointmass",
  "demos_per_group": [4, 4, 4],
  "algorithms": ["pbicrl", "bpl"],
  "sampler": {"iterations": 3000, "thin": 10},
  "margin_sets": [
    {"label": "zero"},
    {"label": "wide", "margins": {"2-3": 1.0, "1-3": 1.0}}
  ],
  "seeds": [1, 2]
})";

fs::path Scratch(const std::string& name) {
  const fs::path dir =
      fs::temp_directory_path() / ("prefcon_experiment_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::map<std::string, std::string> ReadTree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) {
      files[fs::relative(entry.path(), root).string()] = ReadFile(entry.path());
    }
  }
  return files;
}

int RunCli(const std::string& args) {
  const std::string command =
      std::string(PREFCON_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig c = ParseExperimentConfig(kSmallConfig);
  CHECK(c.name == "small");
  CHECK(c.world == WorldKind::kPointMass);
  CHECK(c.margin_sets.size() == 2);
  CHECK(c.margin_sets[1].margins.get(1, 2) == 1.0);
  CHECK(c.output == "small");
  const SamplerConfig s = SamplerFor(c, Algorithm::kPbicrl, 1);
  CHECK(s.iterations == 3000);
  CHECK(s.sigma == 0.1);
  CHECK(s.sampling_frequency == 4);
  CHECK(SamplerFor(c, Algorithm::kPbicrlParametric, 1).sampling_frequency == 3);
  CHECK(ChainSeed(1, Algorithm::kPbicrl) != ChainSeed(1, Algorithm::kBpl));
  CHECK(ChainSeed(1, Algorithm::kPbicrl) != ChainSeed(2, Algorithm::kPbicrl));
}

TEST_CASE("config errors") {
  auto bad = [](const std::string& text) {
    CHECK_THROWS_AS(ParseExperimentConfig(text), ConfigError);
  };
  bad("not json");
  bad(R"({"name": "x", "world": "pointmass", "demos_per_group": [1,1,1],
          "algorithms": ["pbicrl"], "seeds": [1], "colour": 3})");
  bad(R"({"name": "x", "world": "pointmass", "demos_per_group": [1,1,1],
          "algorithms": ["pbicrl"], "seeds": [1], "sampler": {"sigmaa": 1}})");
  bad(R"({"name": "x", "world": "mars", "demos_per_group": [1,1,1],
          "algorithms": ["pbicrl"], "seeds": [1]})");
  bad(R"({"name": "x", "world": "pointmass", "demos_per_group": [1,1],
          "algorithms": ["pbicrl"], "seeds": [1]})");
  bad(R"({"name": "x", "world": "pointmass", "demos_per_group": [1,1,1],
          "algorithms": ["pbicrl-parametric"], "seeds": [1]})");
  bad(R"({"name": "x", "world": "pointmass", "demos_per_group": [1,1,1],
          "algorithms": ["pbicrl"], "seeds": []})");
  bad(R"({"name": "x", "world": "pointmass", "demos_per_group": [1,1,1],
          "algorithms": ["pbicrl"], "seeds": [1],
          "margin_sets": [{"label": "a", "margins": {"3-1": 1}}]})");
  bad(R"({"name": "x", "world": "pointmass", "demos_per_group": [1,1,1],
          "algorithms": ["pbicrl"], "seeds": [1],
          "margin_sets": [{"label": "a", "margins": {"1-2": -1}}]})");
  bad(R"({"name": "x", "world": "pointmass", "demos_per_group": [1,1,1],
          "algorithms": ["pbicrl"], "seeds": [1],
          "sampler": {"sampling_frequency": 1}})");
  bad(R"({"name": "x", "world": "pointmass", "demos_per_group": [1,1,1],
          "algorithms": ["pbicrl"], "seeds": [1], "tune": {"ratios": [1, 2]}})");
}

TEST_CASE("experiments are reproducible byte for byte") {
  const ExperimentConfig c = ParseExperimentConfig(kSmallConfig);
  const fs::path a = Scratch("a");
  const fs::path b = Scratch("b");
  RunExperiment(c, RunOptions{1, true, a});
  RunExperiment(c, RunOptions{2, true, b});
  const auto ta = ReadTree(a);
  const auto tb = ReadTree(b);
  CHECK(ta.size() == 1 + 2 * 4 * 5);
  CHECK(ta == tb);
  CHECK(ta.contains("summary.csv"));
  CHECK(ta.contains("seed_1/pbicrl_zero/chain.csv"));
  CHECK(ta.contains("seed_2/bpl_wide/recovery.csv"));
  for (const auto& [name, contents] : ta) {
    if (name.ends_with(".csv")) CHECK(contents.rfind("# schema: ", 0) == 0);
    CHECK(name.find(".tmp") == std::string::npos);
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("experiment results") {
  ExperimentConfig c = ParseExperimentConfig(kSmallConfig);
  c.seeds = {3};
  const ExperimentResult r = RunExperiment(c, RunOptions{1, true, {}});
  REQUIRE(r.runs.size() == 4);
  for (const RunResult& run : r.runs) {
    REQUIRE(run.recovery.has_value());
    CHECK(run.map_gaps.size() == 2);
    CHECK(run.chain.samples.size() == 300);
  }
  const std::string hypothesis = HypothesisToJson(r.runs[0].chain);
  CHECK(ParseHypothesisJson(hypothesis) == r.runs[0].chain.map_sample.hypothesis);
  CHECK(ParseHypothesisJson(hypothesis, "final") ==
        r.runs[0].chain.final_sample.hypothesis);
  CHECK_THROWS_AS(ParseHypothesisJson("{}"), InvalidInputError);
}

TEST_CASE("parametric sweep writes cmse tables") {
  const ExperimentConfig c = ParseExperimentConfig(R"({
    "name": "sweep",
    "world": "locomotion_hc",
    "demo_count_sweep": [3, 5],
    "algorithms": ["pbicrl-parametric"],
    "sampler": {"iterations": 1500, "thin": 10},
    "seeds": [1, 2]
  })");
  const fs::path out = Scratch("sweep");
  const ExperimentResult r = RunExperiment(c, RunOptions{1, true, out});
  CHECK(r.runs.size() == 4);
  CHECK(fs::exists(out / "n3" / "cmse_pbicrl-parametric_zero.csv"));
  CHECK(fs::exists(out / "n5" / "seed_2" / "pbicrl-parametric_zero" /
                   "hypothesis.json"));
  const std::string summary = ReadFile(out / "summary.csv");
  CHECK(summary.find("5/5,pbicrl-parametric,zero,cmse,1,") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("cli exit codes and pipeline") {
  const fs::path dir = Scratch("cli");
  fs::create_directories(dir);
  const fs::path config = dir / "small.cfg";
  WriteFileAtomically(config, kSmallConfig);
  const std::string cfg = "--config " + config.string();

  CHECK(RunCli("") == 1);
  CHECK(RunCli("frobnicate") == 1);
  CHECK(RunCli("recipe --config /nonexistent.cfg") == 1);
  WriteFileAtomically(dir / "broken.cfg", "{\"name\": \"x\", \"oops\": 1}");
  CHECK(RunCli("recipe --quiet --config " + (dir / "broken.cfg").string()) == 1);

  CHECK(RunCli("gen-demos --quiet " + cfg + " --seed-override 5 --out " +
               (dir / "data").string()) == 0);
  const fs::path manifest = dir / "data" / "seed_5" / "manifest.txt";
  REQUIRE(fs::exists(manifest));
  CHECK(RunCli("infer pbicrl --quiet " + cfg + " --dataset " +
               manifest.string() + " --out " + (dir / "infer").string()) == 0);
  CHECK(fs::exists(dir / "infer" / "chain.csv"));
  CHECK(RunCli("infer sideways " + cfg + " --dataset " + manifest.string()) == 1);
  CHECK(RunCli("evaluate --quiet " + cfg + " --dataset " + manifest.string() +
               " --hypothesis " + (dir / "infer" / "hypothesis.json").string() +
               " --out " + (dir / "eval").string()) == 0);
  CHECK(fs::exists(dir / "eval" / "recovery.csv"));
  CHECK(RunCli("tune-margins --quiet " + cfg + " --dataset " +
               manifest.string() + " --ratios 4 --out " +
               (dir / "tune").string()) == 0);
  CHECK(fs::exists(dir / "tune" / "margins.json"));
  CHECK(RunCli("tune-margins --quiet " + cfg + " --dataset " +
               manifest.string() + " --ratios 4 5") == 1);
  fs::remove_all(dir);
}
