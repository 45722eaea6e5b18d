#include "prefcon/experiment.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include <json.hpp>

#include "prefcon/envs.h"
#include "prefcon/io.h"

namespace prefcon {
namespace {

using nlohmann::json;

void RejectUnknownKeys(const json& object, const std::set<std::string>& known,
                       const std::string& where) {
  if (!object.is_object()) {
    throw ConfigError(where + " must be a JSON object");
  }
  for (const auto& [key, value] : object.items()) {
    if (!known.contains(key)) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T Get(const json& object, const std::string& key, const std::string& where) {
  try {
    return object.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "' in " + where + ": " +
                      e.what());
  }
}

MarginSpec ParseMargins(const json& object, std::size_t num_groups,
                        const std::string& where) {
  if (!object.is_object()) throw ConfigError(where + " must be an object");
  MarginSpec spec = MarginSpec::Zero(num_groups);
  for (const auto& [key, value] : object.items()) {
    unsigned k = 0;
    unsigned l = 0;
    char dash = 0;
    if (std::sscanf(key.c_str(), "%u%c%u", &k, &dash, &l) != 3 || dash != '-' ||
        key != std::to_string(k) + "-" + std::to_string(l)) {
      throw ConfigError("margin key '" + key + "' in " + where +
                        " must look like \"1-2\"");
    }
    if (k < 1 || l <= k || l > num_groups) {
      throw ConfigError("margin key '" + key + "' in " + where +
                        " needs 1 <= k < l <= " + std::to_string(num_groups));
    }
    if (!value.is_number()) {
      throw ConfigError("margin '" + key + "' in " + where +
                        " must be a number");
    }
    const double v = value.get<double>();
    if (!(v >= 0.0)) {
      throw ConfigError("margin '" + key + "' in " + where +
                        " must be non-negative");
    }
    spec.set(k - 1, l - 1, v);
  }
  return spec;
}

SamplerOverrides ParseSamplerOverrides(const json& object) {
  const std::string where = "sampler";
  RejectUnknownKeys(object,
                    {"iterations", "sampling_frequency", "sigma",
                     "sigma_weight", "sigma_location", "burn_in_fraction",
                     "thin", "nonpositive_weights", "init_weight_scale"},
                    where);
  SamplerOverrides o;
  if (object.contains("iterations")) {
    o.iterations = Get<std::int64_t>(object, "iterations", where);
  }
  if (object.contains("sampling_frequency")) {
    o.sampling_frequency = Get<int>(object, "sampling_frequency", where);
  }
  if (object.contains("sigma")) o.sigma = Get<double>(object, "sigma", where);
  if (object.contains("sigma_weight")) {
    o.sigma_weight = Get<double>(object, "sigma_weight", where);
  }
  if (object.contains("sigma_location")) {
    o.sigma_location = Get<double>(object, "sigma_location", where);
  }
  if (object.contains("burn_in_fraction")) {
    o.burn_in_fraction = Get<double>(object, "burn_in_fraction", where);
  }
  if (object.contains("thin")) o.thin = Get<std::int64_t>(object, "thin", where);
  if (object.contains("nonpositive_weights")) {
    o.nonpositive_weights = Get<bool>(object, "nonpositive_weights", where);
  }
  if (object.contains("init_weight_scale")) {
    o.init_weight_scale = Get<double>(object, "init_weight_scale", where);
  }
  return o;
}

bool IsLocomotion(WorldKind world) {
  return world == WorldKind::kLocomotionHc ||
         world == WorldKind::kLocomotionAnt;
}

NavigationWorld NavigationFor(WorldKind world) {
  return world == WorldKind::kReach ? NavigationWorld::Reach()
                                    : NavigationWorld::PointMass();
}

LocomotionWorld LocomotionFor(WorldKind world) {
  return world == WorldKind::kLocomotionAnt ? LocomotionWorld::AntAnalog()
                                            : LocomotionWorld::HalfCheetahAnalog();
}

json HypothesisJson(const ChainSample& sample) {
  return json{{"iteration", sample.iteration},
              {"log_likelihood", sample.log_likelihood},
              {"mask", sample.hypothesis.mask},
              {"weights", sample.hypothesis.weights},
              {"locations", sample.hypothesis.locations}};
}

std::filesystem::path SweepDir(const std::filesystem::path& root,
                               const ExperimentConfig& config,
                               std::size_t sweep_index) {
  if (config.demo_count_sweep.empty()) return root;
  return root / ("n" + std::to_string(config.demo_count_sweep[sweep_index]));
}

std::string RunDirName(Algorithm algorithm, const std::string& label) {
  return std::string(AlgorithmName(algorithm)) + "_" + label;
}

void Log(const RunOptions& options, const std::string& line) {
  if (options.quiet) return;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  std::fprintf(stderr, "%s\n", line.c_str());
}

template <typename Fn>
void ParallelFor(std::size_t count, int threads, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
      }
    }
  };
  const std::size_t n = std::min<std::size_t>(std::max(1, threads), count);
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

struct Accumulator {
  std::vector<double> values;
  void Add(double v) { values.push_back(v); }
};

}  // namespace

const char* WorldKindName(WorldKind kind) {
  switch (kind) {
    case WorldKind::kPointMass: return "pointmass";
    case WorldKind::kReach: return "reach";
    case WorldKind::kLocomotionHc: return "locomotion_hc";
    case WorldKind::kLocomotionAnt: return "locomotion_ant";
    case WorldKind::kGrid3x3: return "grid3x3";
  }
  return "unknown";
}

const char* AlgorithmName(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kPbicrl: return "pbicrl";
    case Algorithm::kPbicrlParametric: return "pbicrl-parametric";
    case Algorithm::kBpl: return "bpl";
  }
  return "unknown";
}

WorldKind ParseWorldKind(const std::string& name) {
  for (WorldKind kind :
       {WorldKind::kPointMass, WorldKind::kReach, WorldKind::kLocomotionHc,
        WorldKind::kLocomotionAnt, WorldKind::kGrid3x3}) {
    if (name == WorldKindName(kind)) return kind;
  }
  throw ConfigError("unknown world '" + name +
                    "' (expected pointmass, reach, locomotion_hc, "
                    "locomotion_ant or grid3x3)");
}

Algorithm ParseAlgorithm(const std::string& name) {
  for (Algorithm a :
       {Algorithm::kPbicrl, Algorithm::kPbicrlParametric, Algorithm::kBpl}) {
    if (name == AlgorithmName(a)) return a;
  }
  throw ConfigError("unknown algorithm '" + name +
                    "' (expected pbicrl, pbicrl-parametric or bpl)");
}

std::size_t ExperimentConfig::num_groups() const {
  if (world == WorldKind::kGrid3x3) return 3;
  return IsLocomotion(world) ? 2 : 3;
}

void ExperimentConfig::Validate() const {
  if (name.empty()) throw ConfigError("config needs a non-empty 'name'");
  if (algorithms.empty()) throw ConfigError("config needs 'algorithms'");
  if (seeds.empty()) throw ConfigError("config needs at least one seed");
  const std::size_t K = num_groups();
  if (world == WorldKind::kGrid3x3) {
    if (!demos_per_group.empty() || !demo_count_sweep.empty()) {
      throw ConfigError("grid3x3 has fixed singleton groups; drop "
                        "'demos_per_group' and 'demo_count_sweep'");
    }
  } else if (demo_count_sweep.empty()) {
    if (demos_per_group.size() != K) {
      throw ConfigError("'demos_per_group' needs " + std::to_string(K) +
                        " entries for world " + WorldKindName(world));
    }
  } else if (!demos_per_group.empty()) {
    throw ConfigError("use either 'demos_per_group' or 'demo_count_sweep'");
  }
  for (std::size_t n : demos_per_group) {
    if (n == 0) throw ConfigError("demo counts must be at least 1");
  }
  for (std::size_t n : demo_count_sweep) {
    if (n == 0) throw ConfigError("demo counts must be at least 1");
  }
  for (Algorithm a : algorithms) {
    if (a == Algorithm::kPbicrlParametric && !IsLocomotion(world)) {
      throw ConfigError(
          "pbicrl-parametric needs a locomotion world (progress values)");
    }
  }
  if (num_constraints == 0) {
    throw ConfigError("num_constraints must be at least 1");
  }
  std::set<std::string> labels;
  for (const MarginSet& set : margin_sets) {
    if (set.label.empty() ||
        set.label.find_first_of("/\\ ,") != std::string::npos) {
      throw ConfigError("margin set labels must be non-empty and free of "
                        "'/', '\\', ',' and spaces");
    }
    if (!labels.insert(set.label).second) {
      throw ConfigError("duplicate margin set label '" + set.label + "'");
    }
    if (set.margins.num_groups() != K) {
      throw ConfigError("margin set '" + set.label + "' has the wrong size");
    }
  }
  if (tune) {
    if (labels.contains("tuned")) {
      throw ConfigError("the label 'tuned' is reserved when 'tune' is set");
    }
    try {
      tune->target.Validate(K);
    } catch (const InvalidInputError& e) {
      throw ConfigError(std::string("tune: ") + e.what());
    }
    if (!(tune->candidate_fraction > 0.0 && tune->candidate_fraction <= 1.0)) {
      throw ConfigError("tune.candidate_fraction must lie in (0, 1]");
    }
    for (double v : tune->values) {
      if (!(v >= 0.0)) throw ConfigError("tune.values must be non-negative");
    }
  }
  for (Algorithm a : algorithms) SamplerFor(*this, a, 0).Validate();
}

ExperimentConfig ParseExperimentConfig(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const std::string where = "config";
  RejectUnknownKeys(root,
                    {"name", "world", "demos_per_group", "demo_count_sweep",
                     "algorithms", "sampler", "margin_sets", "tune", "seeds",
                     "num_constraints", "save_datasets", "output"},
                    where);
  ExperimentConfig c;
  c.name = Get<std::string>(root, "name", where);
  c.world = ParseWorldKind(Get<std::string>(root, "world", where));
  if (root.contains("demos_per_group")) {
    c.demos_per_group =
        Get<std::vector<std::size_t>>(root, "demos_per_group", where);
  }
  if (root.contains("demo_count_sweep")) {
    c.demo_count_sweep =
        Get<std::vector<std::size_t>>(root, "demo_count_sweep", where);
  }
  for (const std::string& name :
       Get<std::vector<std::string>>(root, "algorithms", where)) {
    c.algorithms.push_back(ParseAlgorithm(name));
  }
  if (root.contains("sampler")) {
    c.sampler = ParseSamplerOverrides(root.at("sampler"));
  }
  const std::size_t K = c.num_groups();
  if (root.contains("margin_sets")) {
    const json& sets = root.at("margin_sets");
    if (!sets.is_array()) throw ConfigError("'margin_sets' must be an array");
    for (std::size_t s = 0; s < sets.size(); ++s) {
      const std::string w = "margin_sets[" + std::to_string(s) + "]";
      RejectUnknownKeys(sets[s], {"label", "margins"}, w);
      c.margin_sets.push_back(
          {Get<std::string>(sets[s], "label", w),
           sets[s].contains("margins")
               ? ParseMargins(sets[s].at("margins"), K, w + ".margins")
               : MarginSpec::Zero(K)});
    }
  }
  if (root.contains("tune")) {
    const json& t = root.at("tune");
    RejectUnknownKeys(t, {"ratios", "tolerance", "values", "candidate_fraction"},
                      "tune");
    TuneSettings settings;
    settings.target.ratios = Get<std::vector<double>>(t, "ratios", "tune");
    if (t.contains("tolerance")) {
      settings.target.tolerance = Get<double>(t, "tolerance", "tune");
    }
    if (t.contains("values")) {
      settings.values = Get<std::vector<double>>(t, "values", "tune");
    }
    if (t.contains("candidate_fraction")) {
      settings.candidate_fraction = Get<double>(t, "candidate_fraction", "tune");
    }
    c.tune = settings;
  }
  c.seeds = Get<std::vector<std::uint64_t>>(root, "seeds", where);
  if (root.contains("num_constraints")) {
    c.num_constraints = Get<std::size_t>(root, "num_constraints", where);
  }
  if (root.contains("save_datasets")) {
    c.save_datasets = Get<bool>(root, "save_datasets", where);
  }
  c.output = root.contains("output") ? Get<std::string>(root, "output", where)
                                     : c.name;
  if (c.margin_sets.empty() && !c.tune) {
    c.margin_sets.push_back({"zero", MarginSpec::Zero(K)});
  }
  c.Validate();
  return c;
}

ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path) {
  std::string text;
  try {
    text = ReadFile(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  try {
    return ParseExperimentConfig(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

SamplerConfig SamplerFor(const ExperimentConfig& config, Algorithm algorithm,
                         std::uint64_t seed) {
  SamplerConfig s = algorithm == Algorithm::kPbicrlParametric
                        ? SamplerConfig::ParametricDefaults()
                        : SamplerConfig::FixedFeatureDefaults();
  const SamplerOverrides& o = config.sampler;
  if (o.iterations) s.iterations = *o.iterations;
  if (o.sampling_frequency) s.sampling_frequency = *o.sampling_frequency;
  if (o.sigma) s.sigma = *o.sigma;
  if (o.sigma_weight) s.sigma_weight = *o.sigma_weight;
  if (o.sigma_location) s.sigma_location = *o.sigma_location;
  if (o.burn_in_fraction) s.burn_in_fraction = *o.burn_in_fraction;
  if (o.thin) s.thin = *o.thin;
  if (o.nonpositive_weights) s.nonpositive_weights = *o.nonpositive_weights;
  if (o.init_weight_scale) s.init_weight_scale = *o.init_weight_scale;
  s.seed = ChainSeed(seed, algorithm);
  return s;
}

std::uint64_t ChainSeed(std::uint64_t seed, Algorithm algorithm) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(algorithm), 0x636861u};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

NominalModel NominalFor(WorldKind world) {
  switch (world) {
    case WorldKind::kPointMass:
    case WorldKind::kReach:
      return {NavigationFor(world).nominal_weights, 1.0};
    case WorldKind::kLocomotionHc:
    case WorldKind::kLocomotionAnt:
      return {LocomotionFor(world).nominal_weights, 1.0};
    case WorldKind::kGrid3x3:
      return Grid3x3Scenario().nominal;
  }
  return {};
}

WorldTruth TruthFor(const ExperimentConfig& config) {
  WorldTruth truth;
  switch (config.world) {
    case WorldKind::kPointMass:
    case WorldKind::kReach: {
      const NavigationWorld world = NavigationFor(config.world);
      truth.mask = world.true_mask();
      truth.weights = world.penalty_weights();
      break;
    }
    case WorldKind::kLocomotionHc:
    case WorldKind::kLocomotionAnt: {
      const LocomotionWorld world = LocomotionFor(config.world);
      truth.mask.assign(config.num_constraints, 0);
      truth.weights.assign(config.num_constraints, 0.0);
      truth.mask[0] = 1;
      truth.weights[0] = world.penalty;
      truth.theta_star = world.theta_star;
      break;
    }
    case WorldKind::kGrid3x3:
      truth.mask = Grid3x3Scenario().true_mask;
      break;
  }
  return truth;
}

std::size_t NumSweepEntries(const ExperimentConfig& config) {
  return config.demo_count_sweep.empty() ? 1 : config.demo_count_sweep.size();
}

std::vector<std::size_t> CountsFor(const ExperimentConfig& config,
                                   std::size_t sweep_index) {
  if (config.world == WorldKind::kGrid3x3) return {1, 1, 1};
  if (config.demo_count_sweep.empty()) return config.demos_per_group;
  return std::vector<std::size_t>(config.num_groups(),
                                  config.demo_count_sweep.at(sweep_index));
}

PreferenceDataset MakeDataset(const ExperimentConfig& config,
                              std::size_t sweep_index, std::uint64_t seed) {
  const std::vector<std::size_t> counts = CountsFor(config, sweep_index);
  switch (config.world) {
    case WorldKind::kPointMass:
    case WorldKind::kReach:
      return BuildDataset(NavigationFor(config.world), counts, seed);
    case WorldKind::kLocomotionHc:
    case WorldKind::kLocomotionAnt:
      return BuildDataset(LocomotionFor(config.world), counts, seed);
    case WorldKind::kGrid3x3:
      return Grid3x3Scenario().dataset;
  }
  throw ConfigError("unknown world");
}

PosteriorChain RunAlgorithm(const ExperimentConfig& config,
                            Algorithm algorithm,
                            const PreferenceDataset& dataset,
                            const MarginSpec& margins, std::uint64_t seed) {
  const NominalModel nominal = NominalFor(config.world);
  const SamplerConfig sampler = SamplerFor(config, algorithm, seed);
  switch (algorithm) {
    case Algorithm::kPbicrl:
      return RunPbicrl(dataset, nominal, margins, sampler);
    case Algorithm::kPbicrlParametric:
      return RunPbicrlParametric(dataset, nominal, margins, sampler,
                                 config.num_constraints);
    case Algorithm::kBpl:
      return RunBpl(dataset, nominal, margins, sampler);
  }
  throw ConfigError("unknown algorithm");
}

ExperimentResult RunExperiment(const ExperimentConfig& config,
                               const RunOptions& options) {
  config.Validate();
  const auto start = std::chrono::steady_clock::now();
  const NominalModel nominal = NominalFor(config.world);
  const WorldTruth truth = TruthFor(config);
  const bool write = !options.output_dir.empty();

  struct Unit {
    std::size_t sweep_index;
    std::uint64_t seed;
  };
  std::vector<Unit> units;
  for (std::size_t s = 0; s < NumSweepEntries(config); ++s) {
    for (std::uint64_t seed : config.seeds) units.push_back({s, seed});
  }
  std::vector<std::vector<RunResult>> unit_runs(units.size());
  std::vector<std::optional<TuneRecord>> unit_tuning(units.size());

  ParallelFor(units.size(), options.threads, [&](std::size_t u) {
    const Unit unit = units[u];
    const PreferenceDataset dataset =
        MakeDataset(config, unit.sweep_index, unit.seed);
    const std::filesystem::path dir =
        SweepDir(options.output_dir, config, unit.sweep_index) /
        ("seed_" + std::to_string(unit.seed));
    if (write && config.save_datasets) SaveDataset(dataset, dir / "dataset");

    std::vector<MarginSet> sets = config.margin_sets;
    if (config.tune) {
      const auto t0 = std::chrono::steady_clock::now();
      TuneRecord record{unit.sweep_index, unit.seed, {}};
      const std::vector<MarginSpec> grid = MarginGrid(
          config.num_groups(), config.tune->values.empty()
                                   ? DefaultMarginValues()
                                   : config.tune->values);
      SamplerConfig sampler = SamplerFor(config, Algorithm::kPbicrl, unit.seed);
      TuningOptions tuning{config.tune->candidate_fraction, 1};
      record.result = TuneMargins(dataset, nominal, config.tune->target, grid,
                                  sampler, tuning);
      sets.push_back({"tuned", record.result.margins});
      if (write) {
        WriteFileAtomically(dir / "tune" / "candidates.csv",
                            MarginCandidatesToCsv(record.result));
        WriteFileAtomically(dir / "tune" / "margins.json",
                            MarginSpecToJson(record.result.margins) + "\n");
      }
      Log(options, "seed " + std::to_string(unit.seed) + " tune: " +
                       MarginSpecToJson(record.result.margins) + " (" +
                       std::to_string(grid.size()) + " candidates, " +
                       std::to_string(std::chrono::duration<double>(
                                          std::chrono::steady_clock::now() - t0)
                                          .count()) +
                       " s)");
      unit_tuning[u] = std::move(record);
    }

    for (Algorithm algorithm : config.algorithms) {
      for (const MarginSet& set : sets) {
        RunResult run;
        run.sweep_index = unit.sweep_index;
        run.seed = unit.seed;
        run.algorithm = algorithm;
        run.margin_label = set.label;
        run.margins = set.margins;
        const auto t0 = std::chrono::steady_clock::now();
        if (set.label == "tuned" && algorithm == Algorithm::kPbicrl &&
            unit_tuning[u]) {
          run.chain = unit_tuning[u]->result.chain;
        } else {
          run.chain =
              RunAlgorithm(config, algorithm, dataset, set.margins, unit.seed);
        }
        run.seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        run.summary = SummarizeChain(run.chain);
        const ConstraintHypothesis& map = run.chain.map_sample.hypothesis;
        if (truth.weights.size() == map.size()) {
          run.recovery = MakeRecoveryReport(map, truth.mask, truth.weights);
        }
        run.map_gaps = GroupRewardGaps(map, nominal, dataset);
        if (write) {
          const std::filesystem::path rd = dir / RunDirName(algorithm, set.label);
          WriteFileAtomically(rd / "chain.csv", ChainToCsv(run.chain));
          WriteFileAtomically(rd / "summary.csv",
                              ChainSummaryToCsv(run.summary));
          WriteFileAtomically(rd / "hypothesis.json",
                              HypothesisToJson(run.chain));
          WriteFileAtomically(
              rd / "group_rewards.csv",
              GroupRewardDistributionToCsv(
                  GroupRewardDistribution(map, nominal, dataset)));
          if (run.recovery) {
            WriteFileAtomically(rd / "recovery.csv",
                                RecoveryReportToCsv(*run.recovery));
          }
        }
        std::string line = "seed " + std::to_string(unit.seed);
        if (!config.demo_count_sweep.empty()) {
          line += " n=" + std::to_string(
                              config.demo_count_sweep[unit.sweep_index]);
        }
        line += " " + RunDirName(algorithm, set.label) +
                ": map loglik " + FormatDouble(run.chain.map_sample.log_likelihood) +
                ", " + std::to_string(run.seconds) + " s";
        Log(options, line);
        unit_runs[u].push_back(std::move(run));
      }
    }
  });

  ExperimentResult result;
  result.config = config;
  for (std::size_t u = 0; u < units.size(); ++u) {
    for (RunResult& run : unit_runs[u]) result.runs.push_back(std::move(run));
    if (unit_tuning[u]) result.tuning.push_back(std::move(*unit_tuning[u]));
  }
  result.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();

  if (write) {
    WriteFileAtomically(options.output_dir / "summary.csv",
                        ExperimentSummaryCsv(result));
    if (truth.theta_star) {
      for (std::size_t s = 0; s < NumSweepEntries(config); ++s) {
        for (Algorithm algorithm : config.algorithms) {
          if (algorithm != Algorithm::kPbicrlParametric) continue;
          for (const MarginSet& set : config.margin_sets) {
            std::vector<double> estimates;
            for (const RunResult& run : result.runs) {
              if (run.sweep_index == s && run.algorithm == algorithm &&
                  run.margin_label == set.label) {
                estimates.push_back(
                    run.chain.map_sample.hypothesis.locations.at(0));
              }
            }
            WriteFileAtomically(
                SweepDir(options.output_dir, config, s) /
                    ("cmse_" + RunDirName(algorithm, set.label) + ".csv"),
                CmseToCsv(estimates, *truth.theta_star));
          }
        }
      }
    }
  }
  return result;
}

std::string HypothesisToJson(const PosteriorChain& chain) {
  json out{{"schema", "prefcon-hypothesis/v1"},
           {"algorithm", chain.algorithm},
           {"map", HypothesisJson(chain.map_sample)},
           {"final", HypothesisJson(chain.final_sample)}};
  return out.dump(2) + "\n";
}

ConstraintHypothesis ParseHypothesisJson(const std::string& text,
                                         const std::string& which) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInputError(std::string("hypothesis file is not JSON: ") +
                            e.what());
  }
  if (!root.is_object() || root.value("schema", "") != "prefcon-hypothesis/v1") {
    throw InvalidInputError("hypothesis file lacks schema prefcon-hypothesis/v1");
  }
  if (!root.contains(which)) {
    throw InvalidInputError("hypothesis file has no '" + which + "' entry");
  }
  const json& h = root.at(which);
  ConstraintHypothesis out;
  try {
    out.mask = h.at("mask").get<std::vector<int>>();
    out.weights = h.at("weights").get<std::vector<double>>();
    out.locations = h.at("locations").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("malformed hypothesis: ") + e.what());
  }
  out.Validate();
  return out;
}

std::string ExperimentSummaryCsv(const ExperimentResult& result) {
  const ExperimentConfig& config = result.config;
  const WorldTruth truth = TruthFor(config);
  // (sweep, algorithm, label) -> statistic/index -> values over seeds.
  using Key = std::tuple<std::size_t, int, std::string>;
  std::map<Key, std::map<std::pair<std::string, std::size_t>, Accumulator>>
      table;
  std::vector<Key> order;
  for (const RunResult& run : result.runs) {
    const Key key{run.sweep_index, static_cast<int>(run.algorithm),
                  run.margin_label};
    if (!table.contains(key)) order.push_back(key);
    auto& stats = table[key];
    const ConstraintHypothesis& map = run.chain.map_sample.hypothesis;
    for (std::size_t j = 0; j < map.size(); ++j) {
      stats[{"c_map", j + 1}].Add(map.mask[j]);
      stats[{"w_map_effective", j + 1}].Add(map.EffectiveWeight(j));
    }
    for (std::size_t j = 0; j < map.locations.size(); ++j) {
      stats[{"theta_map", j + 1}].Add(map.locations[j]);
    }
    for (std::size_t g = 0; g < run.map_gaps.size(); ++g) {
      stats[{"gap", g + 1}].Add(run.map_gaps[g]);
    }
    for (std::size_t g = 0; g + 1 < run.map_gaps.size(); ++g) {
      stats[{"gap_ratio", g + 1}].Add(run.map_gaps[g + 1] / run.map_gaps[g]);
    }
    if (run.recovery) {
      stats[{"mask_accuracy", 0}].Add(run.recovery->mask_accuracy);
      stats[{"active_weight_rmse", 0}].Add(run.recovery->active_weight_rmse);
    }
    stats[{"map_loglik", 0}].Add(run.chain.map_sample.log_likelihood);
    for (std::size_t k = 0; k < kNumProposalKinds; ++k) {
      if (run.summary.proposals[k] == 0) continue;
      stats[{std::string("acceptance_") +
                 ProposalKindName(static_cast<ProposalKind>(k)),
             0}]
          .Add(run.summary.acceptance_rate[k]);
    }
  }

  std::string out =
      "# schema: prefcon-experiment-summary/v1 name=" + config.name +
      " world=" + WorldKindName(config.world) +
      " seeds=" + std::to_string(config.seeds.size()) +
      " std=population cmse=mean_and_population_std_of_squared_error\n"
      "demos_per_group,algorithm,margins,statistic,index,mean,std\n";
  for (const Key& key : order) {
    const auto& [sweep, algo, label] = key;
    const std::vector<std::size_t> counts = CountsFor(config, sweep);
    std::string demos;
    for (std::size_t g = 0; g < counts.size(); ++g) {
      demos += (g ? "/" : "") + std::to_string(counts[g]);
    }
    const std::string prefix = demos + "," +
                               AlgorithmName(static_cast<Algorithm>(algo)) +
                               "," + label + ",";
    auto& stats = table[key];
    for (auto& [stat, acc] : stats) {
      double mean = 0.0;
      for (double v : acc.values) mean += v;
      mean /= static_cast<double>(acc.values.size());
      double ss = 0.0;
      for (double v : acc.values) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / static_cast<double>(acc.values.size()));
      out += prefix + stat.first + "," + std::to_string(stat.second) + "," +
             FormatDouble(mean) + "," + FormatDouble(sd) + "\n";
    }
    if (truth.theta_star && stats.contains({"theta_map", 1})) {
      const CmseResult cmse =
          Cmse(stats[{"theta_map", 1}].values, *truth.theta_star);
      out += prefix + "cmse,1," + FormatDouble(cmse.mean) + "," +
             FormatDouble(cmse.stddev) + "\n";
    }
  }
  return out;
}

std::filesystem::path DefaultOutputRoot() {
  const char* root = std::getenv("PREFCON_OUTPUT_ROOT");
  return root && *root ? std::filesystem::path(root)
                       : std::filesystem::path("out");
}

int DefaultThreadCount() {
  if (const char* env = std::getenv("PREFCON_THREADS"); env && *env) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1 || n > 1024) {
      throw ConfigError("PREFCON_THREADS must be an integer in [1, 1024]");
    }
    return static_cast<int>(n);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace prefcon
