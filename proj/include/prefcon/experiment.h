// Experiment configuration and orchestration.
//
// A config is a JSON object; unknown keys are rejected at every level. See
// README.md for the grammar. RunExperiment generates (or loads) one dataset
// per seed and demo count, runs every requested algorithm under every margin
// set, and writes per-run and aggregate CSV files.

#ifndef PREFCON_EXPERIMENT_H_
#define PREFCON_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "prefcon/likelihood.h"
#include "prefcon/margins.h"
#include "prefcon/metrics.h"
#include "prefcon/model.h"
#include "prefcon/sampler.h"

namespace prefcon {

enum class WorldKind { kPointMass, kReach, kLocomotionHc, kLocomotionAnt, kGrid3x3 };
enum class Algorithm { kPbicrl, kPbicrlParametric, kBpl };

const char* WorldKindName(WorldKind kind);
const char* AlgorithmName(Algorithm algorithm);
// Throws ConfigError on unknown names.
WorldKind ParseWorldKind(const std::string& name);
Algorithm ParseAlgorithm(const std::string& name);

struct SamplerOverrides {
  std::optional<std::int64_t> iterations;
  std::optional<int> sampling_frequency;
  std::optional<double> sigma;
  std::optional<double> sigma_weight;
  std::optional<double> sigma_location;
  std::optional<double> burn_in_fraction;
  std::optional<std::int64_t> thin;
  std::optional<bool> nonpositive_weights;
  std::optional<double> init_weight_scale;
};

struct MarginSet {
  std::string label;
  MarginSpec margins;
};

struct TuneSettings {
  MarginTarget target;
  std::vector<double> values;  // empty: DefaultMarginValues()
  double candidate_fraction = 0.25;
};

struct ExperimentConfig {
  std::string name;
  WorldKind world = WorldKind::kPointMass;
  std::vector<std::size_t> demos_per_group;
  // When non-empty, one dataset per entry with that many demos in every group.
  std::vector<std::size_t> demo_count_sweep;
  std::vector<Algorithm> algorithms;
  SamplerOverrides sampler;
  std::vector<MarginSet> margin_sets;
  std::optional<TuneSettings> tune;
  std::vector<std::uint64_t> seeds;
  std::size_t num_constraints = 1;
  bool save_datasets = false;
  std::string output;

  std::size_t num_groups() const;
  // Throws ConfigError.
  void Validate() const;
};

// Throws ConfigError with the offending key on malformed input.
ExperimentConfig ParseExperimentConfig(const std::string& json_text);
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);

// Algorithm defaults with the config's overrides applied.
SamplerConfig SamplerFor(const ExperimentConfig& config, Algorithm algorithm,
                         std::uint64_t seed);

// Chain seed for (dataset seed, algorithm); margin sets share it.
std::uint64_t ChainSeed(std::uint64_t seed, Algorithm algorithm);

struct WorldTruth {
  std::vector<int> mask;
  std::vector<double> weights;  // penalty weights; empty when unknown
  std::optional<double> theta_star;
};

NominalModel NominalFor(WorldKind world);
WorldTruth TruthFor(const ExperimentConfig& config);
// Demo counts per group for one sweep entry (or the fixed counts).
std::vector<std::size_t> CountsFor(const ExperimentConfig& config,
                                   std::size_t sweep_index);
std::size_t NumSweepEntries(const ExperimentConfig& config);
PreferenceDataset MakeDataset(const ExperimentConfig& config,
                              std::size_t sweep_index, std::uint64_t seed);

PosteriorChain RunAlgorithm(const ExperimentConfig& config,
                            Algorithm algorithm,
                            const PreferenceDataset& dataset,
                            const MarginSpec& margins, std::uint64_t seed);

struct RunResult {
  std::size_t sweep_index = 0;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::kPbicrl;
  std::string margin_label;
  MarginSpec margins;
  PosteriorChain chain;
  ChainSummary summary;
  std::optional<RecoveryReport> recovery;
  std::vector<double> map_gaps;
  double seconds = 0.0;
};

struct TuneRecord {
  std::size_t sweep_index = 0;
  std::uint64_t seed = 0;
  MarginTuningResult result;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RunResult> runs;
  std::vector<TuneRecord> tuning;
  double seconds = 0.0;
};

struct RunOptions {
  int threads = 1;
  bool quiet = false;
  // Nothing is written when empty.
  std::filesystem::path output_dir;
};

ExperimentResult RunExperiment(const ExperimentConfig& config,
                               const RunOptions& options);

// Hypothesis files: {"schema": "prefcon-hypothesis/v1", "algorithm": ...,
// "map": {...}, "final": {...}} with mask/weights/locations/log_likelihood.
std::string HypothesisToJson(const PosteriorChain& chain);
ConstraintHypothesis ParseHypothesisJson(const std::string& text,
                                         const std::string& which = "map");

// Aggregate over seeds: one row per (demo count, algorithm, margin set,
// statistic, index).
std::string ExperimentSummaryCsv(const ExperimentResult& result);

// Output root from PREFCON_OUTPUT_ROOT (default "out") and thread count from
// PREFCON_THREADS (default: hardware concurrency).
std::filesystem::path DefaultOutputRoot();
int DefaultThreadCount();

}  // namespace prefcon

#endif  // PREFCON_EXPERIMENT_H_
