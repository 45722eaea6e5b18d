// prefcon: generate demonstrations, infer constraints, tune margins,
// evaluate hypotheses and run bundled recipes.
//
// Exit codes: 0 success, 1 user error (bad flags, config or input files),
// 2 internal error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prefcon/experiment.h"
#include "prefcon/io.h"
#include "prefcon/margins.h"
#include "prefcon/metrics.h"

namespace fs = std::filesystem;
using namespace prefcon;

namespace {

constexpr int kUserError = 1;
constexpr int kInternalError = 2;

struct CommonFlags {
  std::string config;
  std::string out;
  std::vector<std::uint64_t> seed_override;
  int threads = 0;
  bool quiet = false;
};

void AddCommon(CLI::App* cmd, CommonFlags& flags, bool config_required = true) {
  auto* opt = cmd->add_option("--config", flags.config, "experiment config (JSON)")
                  ->check(CLI::ExistingFile);
  if (config_required) opt->required();
  cmd->add_option("--out", flags.out,
                  "output directory (default $PREFCON_OUTPUT_ROOT/<output>)");
  cmd->add_option("--seed-override", flags.seed_override,
                  "replace the config's seeds");
  cmd->add_option("--threads", flags.threads,
                  "worker threads (default $PREFCON_THREADS or all cores)")
      ->check(CLI::Range(1, 1024));
  cmd->add_flag("--quiet", flags.quiet, "suppress progress on stderr");
}

ExperimentConfig LoadConfig(const CommonFlags& flags) {
  ExperimentConfig config = LoadExperimentConfig(flags.config);
  if (!flags.seed_override.empty()) {
    config.seeds = flags.seed_override;
    config.Validate();
  }
  return config;
}

fs::path OutputDir(const CommonFlags& flags, const ExperimentConfig& config) {
  if (!flags.out.empty()) return flags.out;
  return DefaultOutputRoot() / config.output;
}

int Threads(const CommonFlags& flags) {
  return flags.threads > 0 ? flags.threads : DefaultThreadCount();
}

void Say(const CommonFlags& flags, const std::string& line) {
  if (!flags.quiet) std::fprintf(stderr, "%s\n", line.c_str());
}

PreferenceDataset LoadDatasetArg(const std::string& manifest) {
  PreferenceDataset dataset = LoadDataset(manifest);
  return dataset;
}

int GenDemos(const CommonFlags& flags) {
  const ExperimentConfig config = LoadConfig(flags);
  const fs::path out = OutputDir(flags, config);
  for (std::size_t s = 0; s < NumSweepEntries(config); ++s) {
    for (std::uint64_t seed : config.seeds) {
      fs::path dir = out;
      if (!config.demo_count_sweep.empty()) {
        dir /= "n" + std::to_string(config.demo_count_sweep[s]);
      }
      dir /= "seed_" + std::to_string(seed);
      const fs::path manifest = SaveDataset(MakeDataset(config, s, seed), dir);
      Say(flags, "wrote " + manifest.string());
    }
  }
  return 0;
}

int Infer(const CommonFlags& flags, const std::string& algorithm_name,
          const std::string& manifest, const std::string& margin_label) {
  const ExperimentConfig config = LoadConfig(flags);
  const Algorithm algorithm = ParseAlgorithm(algorithm_name);
  const PreferenceDataset dataset = LoadDatasetArg(manifest);
  MarginSpec margins = MarginSpec::Zero(dataset.num_groups());
  if (!margin_label.empty()) {
    bool found = false;
    for (const MarginSet& set : config.margin_sets) {
      if (set.label == margin_label) {
        margins = set.margins;
        found = true;
      }
    }
    if (!found) {
      throw ConfigError("no margin set labelled '" + margin_label + "'");
    }
  } else if (!config.margin_sets.empty()) {
    margins = config.margin_sets.front().margins;
  }
  if (margins.num_groups() != dataset.num_groups()) {
    throw ConfigError("margin set and dataset disagree on the group count");
  }
  if (auto warning = MarginAdditivityWarning(margins)) Say(flags, *warning);
  const std::uint64_t seed = config.seeds.front();
  const PosteriorChain chain =
      RunAlgorithm(config, algorithm, dataset, margins, seed);
  const fs::path out = OutputDir(flags, config);
  WriteFileAtomically(out / "chain.csv", ChainToCsv(chain));
  WriteFileAtomically(out / "summary.csv",
                      ChainSummaryToCsv(SummarizeChain(chain)));
  WriteFileAtomically(out / "hypothesis.json", HypothesisToJson(chain));
  Say(flags, "map loglik " + FormatDouble(chain.map_sample.log_likelihood) +
                 "; wrote " + (out / "hypothesis.json").string());
  return 0;
}

int Tune(const CommonFlags& flags, const std::string& manifest,
         const std::vector<double>& ratios, double tolerance,
         double candidate_fraction) {
  const ExperimentConfig config = LoadConfig(flags);
  const PreferenceDataset dataset = LoadDatasetArg(manifest);
  MarginTarget target;
  if (!ratios.empty()) {
    target.ratios = ratios;
    target.tolerance = tolerance;
  } else if (config.tune) {
    target = config.tune->target;
  } else {
    throw ConfigError("give --ratios or a 'tune' section in the config");
  }
  std::vector<double> values = DefaultMarginValues();
  if (config.tune && !config.tune->values.empty()) values = config.tune->values;
  if (candidate_fraction <= 0.0 && config.tune) {
    candidate_fraction = config.tune->candidate_fraction;
  }
  TuningOptions options;
  options.candidate_fraction = candidate_fraction > 0.0 ? candidate_fraction : 0.25;
  options.threads = Threads(flags);
  const MarginTuningResult result = TuneMargins(
      dataset, NominalFor(config.world), target,
      MarginGrid(dataset.num_groups(), values),
      SamplerFor(config, Algorithm::kPbicrl, config.seeds.front()), options);
  const fs::path out = OutputDir(flags, config);
  WriteFileAtomically(out / "candidates.csv", MarginCandidatesToCsv(result));
  WriteFileAtomically(out / "margins.json",
                      MarginSpecToJson(result.margins) + "\n");
  WriteFileAtomically(out / "hypothesis.json", HypothesisToJson(result.chain));
  Say(flags, "selected " + MarginSpecToJson(result.margins) +
                 (result.within_tolerance ? " (within tolerance)"
                                          : " (outside tolerance)"));
  return 0;
}

int Evaluate(const CommonFlags& flags, const std::string& manifest,
             const std::vector<std::string>& hypotheses) {
  const ExperimentConfig config = LoadConfig(flags);
  const PreferenceDataset dataset = LoadDatasetArg(manifest);
  const NominalModel nominal = NominalFor(config.world);
  const WorldTruth truth = TruthFor(config);
  const fs::path out = OutputDir(flags, config);
  std::vector<double> locations;
  for (std::size_t k = 0; k < hypotheses.size(); ++k) {
    const ConstraintHypothesis h = ParseHypothesisJson(ReadFile(hypotheses[k]));
    const std::string suffix =
        hypotheses.size() == 1 ? "" : "_" + std::to_string(k + 1);
    WriteFileAtomically(
        out / ("group_rewards" + suffix + ".csv"),
        GroupRewardDistributionToCsv(
            GroupRewardDistribution(h, nominal, dataset)));
    if (truth.weights.size() == h.size()) {
      WriteFileAtomically(
          out / ("recovery" + suffix + ".csv"),
          RecoveryReportToCsv(MakeRecoveryReport(h, truth.mask, truth.weights)));
    }
    if (!h.locations.empty()) locations.push_back(h.locations.front());
  }
  if (truth.theta_star && !locations.empty()) {
    WriteFileAtomically(out / "cmse.csv", CmseToCsv(locations, *truth.theta_star));
  }
  Say(flags, "wrote evaluation to " + out.string());
  return 0;
}

int Recipe(const CommonFlags& flags) {
  const ExperimentConfig config = LoadConfig(flags);
  RunOptions options;
  options.threads = Threads(flags);
  options.quiet = flags.quiet;
  options.output_dir = OutputDir(flags, config);
  for (const MarginSet& set : config.margin_sets) {
    if (auto warning = MarginAdditivityWarning(set.margins)) {
      Say(flags, "margin set '" + set.label + "': " + *warning);
    }
  }
  const ExperimentResult result = RunExperiment(config, options);
  Say(flags, "recipe " + config.name + " finished in " +
                 std::to_string(result.seconds) + " s; wrote " +
                 (options.output_dir / "summary.csv").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constraint inference from grouped preferences"};
  app.require_subcommand(1);

  CommonFlags gen_flags;
  auto* gen = app.add_subcommand("gen-demos", "write demonstration datasets");
  AddCommon(gen, gen_flags);

  CommonFlags infer_flags;
  std::string infer_algorithm;
  std::string infer_dataset;
  std::string infer_margins;
  auto* infer = app.add_subcommand("infer", "run one sampler on a dataset");
  infer->add_option("algorithm", infer_algorithm,
                    "pbicrl | pbicrl-parametric | bpl")
      ->required()
      ->check(CLI::IsMember({"pbicrl", "pbicrl-parametric", "bpl"}));
  infer->add_option("--dataset", infer_dataset, "dataset manifest")
      ->required()
      ->check(CLI::ExistingFile);
  infer->add_option("--margin-set", infer_margins,
                    "label of the config margin set (default: first)");
  AddCommon(infer, infer_flags);

  CommonFlags tune_flags;
  std::string tune_dataset;
  std::vector<double> tune_ratios;
  double tune_tolerance = 0.5;
  double tune_fraction = 0.0;
  auto* tune = app.add_subcommand("tune-margins",
                                  "grid-search margins against gap ratios");
  tune->add_option("--dataset", tune_dataset, "dataset manifest")
      ->required()
      ->check(CLI::ExistingFile);
  tune->add_option("--ratios", tune_ratios,
                   "target gap ratios gap(k+1,k+2)/gap(k,k+1)");
  tune->add_option("--tolerance", tune_tolerance, "relative tolerance");
  tune->add_option("--candidate-fraction", tune_fraction,
                   "chain length of each candidate relative to the full run");
  AddCommon(tune, tune_flags);

  CommonFlags eval_flags;
  std::string eval_dataset;
  std::vector<std::string> eval_hypotheses;
  auto* evaluate = app.add_subcommand(
      "evaluate", "recovery, group rewards and CMSE for hypothesis files");
  evaluate->add_option("--dataset", eval_dataset, "dataset manifest")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--hypothesis", eval_hypotheses, "hypothesis JSON files")
      ->required()
      ->check(CLI::ExistingFile);
  AddCommon(evaluate, eval_flags);

  CommonFlags recipe_flags;
  auto* recipe = app.add_subcommand(
      "recipe", "generate data, run every algorithm and summarize");
  AddCommon(recipe, recipe_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUserError;
  }

  try {
    if (*gen) return GenDemos(gen_flags);
    if (*infer) {
      return Infer(infer_flags, infer_algorithm, infer_dataset, infer_margins);
    }
    if (*tune) {
      return Tune(tune_flags, tune_dataset, tune_ratios, tune_tolerance,
                  tune_fraction);
    }
    if (*evaluate) return Evaluate(eval_flags, eval_dataset, eval_hypotheses);
    if (*recipe) return Recipe(recipe_flags);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kUserError;
  } catch (const InvalidInputError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kUserError;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kUserError;
  } catch (const TuningFailure& e) {
    std::fprintf(stderr, "tuning failed: %s\n", e.what());
    return kUserError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kInternalError;
  }
  return kInternalError;
}
