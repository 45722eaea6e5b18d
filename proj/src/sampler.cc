#include "prefcon/sampler.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "prefcon/io.h"

namespace prefcon {
namespace {

enum class Variant { kPbicrl, kParametric, kBpl };

ProposalKind ScheduleProposal(Variant variant, std::int64_t iteration,
                              int frequency) {
  const std::int64_t residue = iteration % frequency;
  switch (variant) {
    case Variant::kPbicrl:
      return residue != 0 ? ProposalKind::kFlip : ProposalKind::kWeight;
    case Variant::kParametric:
      if (residue == 0) return ProposalKind::kWeight;
      if (residue == 1) return ProposalKind::kLocation;
      return ProposalKind::kFlip;
    case Variant::kBpl:
      return ProposalKind::kWeight;
  }
  return ProposalKind::kWeight;
}

// Snaps to the nearest grid point; nullopt when the step leaves the grid's
// cells entirely.
std::optional<double> SnapToGrid(const std::vector<double>& grid,
                                 double value) {
  const double spacing = grid[1] - grid[0];
  const double position = (value - grid.front()) / spacing;
  const double index = std::round(position);
  if (index < 0.0 || index > static_cast<double>(grid.size() - 1)) {
    return std::nullopt;
  }
  return grid[static_cast<std::size_t>(index)];
}

ConstraintHypothesis InitialHypothesis(Variant variant,
                                       const PreferenceDataset& dataset,
                                       const SamplerConfig& config,
                                       std::size_t num_constraints,
                                       std::mt19937_64& rng) {
  ConstraintHypothesis h;
  const std::size_t m = variant == Variant::kParametric
                            ? num_constraints
                            : dataset.num_features();
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> weight(
      -config.init_weight_scale,
      config.nonpositive_weights ? 0.0 : config.init_weight_scale);
  for (std::size_t j = 0; j < m; ++j) {
    h.mask.push_back(variant == Variant::kBpl ? 1 : (coin(rng) ? 1 : 0));
    double w = weight(rng);
    if (!config.weight_grid.empty()) {
      std::uniform_int_distribution<std::size_t> pick(
          0, config.weight_grid.size() - 1);
      w = config.weight_grid[pick(rng)];
    }
    h.weights.push_back(w);
  }
  if (variant == Variant::kParametric) {
    std::uniform_real_distribution<double> location(dataset.min_progress(),
                                                    dataset.max_progress());
    for (std::size_t j = 0; j < m; ++j) h.locations.push_back(location(rng));
  }
  return h;
}

PosteriorChain RunChain(Variant variant, const char* name,
                        const PreferenceDataset& dataset,
                        const NominalModel& nominal, const MarginSpec& margins,
                        const SamplerConfig& config,
                        std::size_t num_constraints) {
  config.Validate();
  nominal.Validate();
  if (variant == Variant::kParametric) {
    if (!dataset.has_progress()) {
      throw InvalidInputError(
          "parametric inference needs trajectories with progress values");
    }
    if (config.sampling_frequency < 3) {
      throw ConfigError(
          "parametric sampling needs sampling_frequency >= 3 so that flips, "
          "weight and location steps all occur");
    }
    if (num_constraints == 0) {
      throw ConfigError("parametric sampling needs at least one constraint");
    }
  }

  std::mt19937_64 rng(config.seed);
  ConstraintHypothesis current;
  if (config.initial) {
    current = *config.initial;
    current.Validate();
    if (variant == Variant::kBpl) {
      std::fill(current.mask.begin(), current.mask.end(), 1);
    }
  } else {
    current = InitialHypothesis(variant, dataset, config, num_constraints, rng);
  }
  if ((variant == Variant::kParametric) != current.parametric()) {
    throw InvalidInputError(
        "initial hypothesis does not match the sampler variant");
  }

  LikelihoodCache cache(dataset, nominal, current, margins);
  ConstraintHypothesis proposal = current;

  PosteriorChain chain;
  chain.algorithm = name;
  chain.burn_in_fraction = config.burn_in_fraction;
  chain.map_sample = {0, current, cache.log_likelihood(), true};
  chain.samples.reserve(
      static_cast<std::size_t>(config.iterations / config.thin) + 1);

  std::uniform_int_distribution<std::size_t> pick_feature(0,
                                                           current.size() - 1);
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (std::int64_t it = 1; it <= config.iterations; ++it) {
    const std::size_t j = pick_feature(rng);
    const ProposalKind kind =
        ScheduleProposal(variant, it, config.sampling_frequency);
    const auto kind_index = static_cast<std::size_t>(kind);
    ++chain.proposals[kind_index];

    bool admissible = true;
    switch (kind) {
      case ProposalKind::kFlip:
        proposal.mask[j] = 1 - current.mask[j];
        break;
      case ProposalKind::kWeight: {
        const double step_sd = variant == Variant::kParametric
                                   ? config.sigma_weight
                                   : config.sigma;
        double w = current.weights[j] + step_sd * unit_normal(rng);
        if (!config.weight_grid.empty()) {
          std::optional<double> snapped = SnapToGrid(config.weight_grid, w);
          admissible = snapped.has_value();
          if (admissible) w = *snapped;
        } else if (config.nonpositive_weights) {
          w = -std::fabs(w);
        }
        proposal.weights[j] = w;
        break;
      }
      case ProposalKind::kLocation:
        proposal.locations[j] =
            current.locations[j] + config.sigma_location * unit_normal(rng);
        break;
    }
    const double u = unit(rng);

    const double old_ll = cache.log_likelihood();
    bool accepted = false;
    if (admissible) {
      cache.Checkpoint();
      if (kind == ProposalKind::kLocation) {
        cache.RefreshParametric(proposal);
      } else {
        cache.UpdateCoordinate(proposal, j);
      }
      accepted = MhAccept(cache.log_likelihood(), old_ll, u);
      if (!accepted) cache.Rollback();
    }

    if (accepted) {
      ++chain.accepts[kind_index];
      current.mask[j] = proposal.mask[j];
      current.weights[j] = proposal.weights[j];
      if (current.parametric()) current.locations[j] = proposal.locations[j];
      if (cache.log_likelihood() > chain.map_sample.log_likelihood) {
        chain.map_sample = {it, current, cache.log_likelihood(), true};
      }
    } else {
      proposal.mask[j] = current.mask[j];
      proposal.weights[j] = current.weights[j];
      if (current.parametric()) proposal.locations[j] = current.locations[j];
    }

    if (it % config.thin == 0) {
      chain.samples.push_back({it, current, cache.log_likelihood(), accepted});
    }
  }
  chain.final_sample = {config.iterations, current, cache.log_likelihood(),
                        true};
  return chain;
}

}  // namespace

const char* ProposalKindName(ProposalKind kind) {
  switch (kind) {
    case ProposalKind::kFlip:
      return "flip";
    case ProposalKind::kWeight:
      return "weight";
    case ProposalKind::kLocation:
      return "location";
  }
  return "unknown";
}

SamplerConfig SamplerConfig::FixedFeatureDefaults() { return SamplerConfig{}; }

SamplerConfig SamplerConfig::ParametricDefaults() {
  SamplerConfig config;
  config.sampling_frequency = 3;
  config.sigma_weight = 1.0;
  config.sigma_location = 0.5;
  return config;
}

void SamplerConfig::Validate() const {
  if (iterations <= 0) throw ConfigError("iterations must be positive");
  if (sampling_frequency < 2) {
    throw ConfigError("sampling_frequency must be at least 2");
  }
  if (!(sigma > 0.0) || !(sigma_weight > 0.0) || !(sigma_location > 0.0)) {
    throw ConfigError("proposal standard deviations must be positive");
  }
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw ConfigError("burn_in_fraction must lie in [0, 1)");
  }
  if (thin < 1) throw ConfigError("thin must be at least 1");
  if (!(init_weight_scale > 0.0)) {
    throw ConfigError("init_weight_scale must be positive");
  }
  if (!weight_grid.empty()) {
    if (weight_grid.size() < 2) {
      throw ConfigError("weight_grid needs at least two points");
    }
    const double spacing = weight_grid[1] - weight_grid[0];
    if (!(spacing > 0.0)) throw ConfigError("weight_grid must ascend");
    for (std::size_t g = 1; g < weight_grid.size(); ++g) {
      const double step = weight_grid[g] - weight_grid[g - 1];
      if (std::fabs(step - spacing) > 1e-9 * std::max(1.0, spacing)) {
        throw ConfigError("weight_grid must be uniformly spaced");
      }
    }
  }
}

std::vector<ChainSample> PosteriorChain::PostBurnIn() const {
  const auto skip = static_cast<std::size_t>(
      std::floor(burn_in_fraction * static_cast<double>(samples.size())));
  return {samples.begin() + static_cast<std::ptrdiff_t>(skip), samples.end()};
}

bool MhAccept(double log_lik_new, double log_lik_old, double u) {
  if (log_lik_new >= log_lik_old) return true;
  return std::log(u) < log_lik_new - log_lik_old;
}

PosteriorChain RunPbicrl(const PreferenceDataset& dataset,
                         const NominalModel& nominal,
                         const MarginSpec& margins,
                         const SamplerConfig& config) {
  if (dataset.has_progress() && config.initial &&
      config.initial->parametric()) {
    throw InvalidInputError("use RunPbicrlParametric for parametric data");
  }
  return RunChain(Variant::kPbicrl, "pbicrl", dataset, nominal, margins,
                  config, 0);
}

PosteriorChain RunPbicrlParametric(const PreferenceDataset& dataset,
                                   const NominalModel& nominal,
                                   const MarginSpec& margins,
                                   const SamplerConfig& config,
                                   std::size_t num_constraints) {
  if (config.initial) num_constraints = config.initial->size();
  return RunChain(Variant::kParametric, "pbicrl-parametric", dataset, nominal,
                  margins, config, num_constraints);
}

PosteriorChain RunBpl(const PreferenceDataset& dataset,
                      const NominalModel& nominal, const MarginSpec& margins,
                      const SamplerConfig& config) {
  return RunChain(Variant::kBpl, "bpl", dataset, nominal, margins, config, 0);
}

std::string ChainToCsv(const PosteriorChain& chain) {
  std::string out = "# schema: prefcon-chain/v1 algorithm=" + chain.algorithm +
                    "\n";
  const std::size_t m =
      chain.samples.empty() ? chain.map_sample.hypothesis.size()
                            : chain.samples.front().hypothesis.size();
  const bool parametric = chain.map_sample.hypothesis.parametric();
  out += "iteration,loglik";
  for (std::size_t j = 0; j < m; ++j) out += ",c_" + std::to_string(j + 1);
  for (std::size_t j = 0; j < m; ++j) out += ",w_" + std::to_string(j + 1);
  if (parametric) {
    for (std::size_t j = 0; j < m; ++j) out += ",theta_" + std::to_string(j + 1);
  }
  out += ",accepted\n";
  for (const ChainSample& s : chain.samples) {
    out += std::to_string(s.iteration) + "," + FormatDouble(s.log_likelihood);
    for (int bit : s.hypothesis.mask) out += "," + std::to_string(bit);
    for (double w : s.hypothesis.weights) out += "," + FormatDouble(w);
    for (double t : s.hypothesis.locations) out += "," + FormatDouble(t);
    out += s.accepted ? ",1\n" : ",0\n";
  }
  return out;
}

std::vector<ChainSample> ParseChainCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  std::vector<ChainSample> samples;
  std::size_t m = 0;
  bool parametric = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (header.empty()) {
      header = cells;
      for (const std::string& name : header) {
        if (name.rfind("c_", 0) == 0) ++m;
        if (name.rfind("theta_", 0) == 0) parametric = true;
      }
      const std::size_t expected = 3 + m * (parametric ? 3 : 2);
      if (header.size() != expected || header[0] != "iteration" ||
          header[1] != "loglik" || header.back() != "accepted") {
        throw IoError("unrecognized chain CSV header");
      }
      continue;
    }
    if (cells.size() != header.size()) {
      throw IoError("chain CSV row has " + std::to_string(cells.size()) +
                    " cells, header has " + std::to_string(header.size()));
    }
    auto number = [](const std::string& s) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) {
        throw IoError("bad number in chain CSV: '" + s + "'");
      }
      return v;
    };
    ChainSample s;
    s.iteration = static_cast<std::int64_t>(number(cells[0]));
    s.log_likelihood = number(cells[1]);
    for (std::size_t j = 0; j < m; ++j) {
      s.hypothesis.mask.push_back(static_cast<int>(number(cells[2 + j])));
      s.hypothesis.weights.push_back(number(cells[2 + m + j]));
      if (parametric) {
        s.hypothesis.locations.push_back(number(cells[2 + 2 * m + j]));
      }
    }
    s.accepted = cells.back() == "1";
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace prefcon
