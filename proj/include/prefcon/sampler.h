// Metropolis-Hastings samplers over constraint hypotheses.
//
//   RunPbicrl            mask flips and Gaussian weight steps on known features
//   RunPbicrlParametric  adds Gaussian steps on halfspace locations
//   RunBpl               weight steps only, mask fixed to all ones
//
// Acceptance uses the plain likelihood ratio (flat prior). Proposals are
// symmetric: non-positive weights are kept by reflecting at zero, and the
// optional weight grid rejects steps that land off the grid.

#ifndef PREFCON_SAMPLER_H_
#define PREFCON_SAMPLER_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prefcon/likelihood.h"
#include "prefcon/model.h"

namespace prefcon {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ProposalKind { kFlip = 0, kWeight = 1, kLocation = 2 };
inline constexpr std::size_t kNumProposalKinds = 3;
const char* ProposalKindName(ProposalKind kind);

struct SamplerConfig {
  std::int64_t iterations = 400000;
  int sampling_frequency = 4;
  double sigma = 0.1;           // weight step, fixed-feature and BPL chains
  double sigma_weight = 1.0;    // weight step, parametric chain
  double sigma_location = 0.5;  // location step, parametric chain
  std::uint64_t seed = 0;
  double burn_in_fraction = 0.2;
  std::int64_t thin = 100;
  bool nonpositive_weights = true;
  // Initial weights are drawn from U(-scale, 0) (or U(-scale, scale) when
  // weights may be positive).
  double init_weight_scale = 1.0;
  // Optional uniform grid of admissible weights (ascending, >= 2 points).
  std::vector<double> weight_grid;
  std::optional<ConstraintHypothesis> initial;

  static SamplerConfig FixedFeatureDefaults();
  static SamplerConfig ParametricDefaults();

  // Throws ConfigError.
  void Validate() const;
};

struct ChainSample {
  std::int64_t iteration = 0;
  ConstraintHypothesis hypothesis;
  double log_likelihood = 0.0;
  bool accepted = false;
};

struct PosteriorChain {
  std::string algorithm;
  std::vector<ChainSample> samples;  // every `thin` iterations
  ChainSample map_sample;            // highest log-likelihood state visited
  ChainSample final_sample;
  std::array<std::int64_t, kNumProposalKinds> proposals{};
  std::array<std::int64_t, kNumProposalKinds> accepts{};
  double burn_in_fraction = 0.2;

  // Samples after the burn-in prefix.
  std::vector<ChainSample> PostBurnIn() const;
};

// True iff new >= old or log(u) < new - old.
bool MhAccept(double log_lik_new, double log_lik_old, double u);

PosteriorChain RunPbicrl(const PreferenceDataset& dataset,
                         const NominalModel& nominal,
                         const MarginSpec& margins,
                         const SamplerConfig& config);

// One halfspace feature 1[z >= theta_j] per entry of the hypothesis, with
// `num_constraints` candidate features. Residue i mod f_s == 0 proposes a
// weight step, residue 1 a location step, and every other residue a flip.
PosteriorChain RunPbicrlParametric(const PreferenceDataset& dataset,
                                   const NominalModel& nominal,
                                   const MarginSpec& margins,
                                   const SamplerConfig& config,
                                   std::size_t num_constraints = 1);

PosteriorChain RunBpl(const PreferenceDataset& dataset,
                      const NominalModel& nominal, const MarginSpec& margins,
                      const SamplerConfig& config);

// CSV: iteration, loglik, c_1..c_M, w_1..w_M, theta_1..theta_M, accepted.
std::string ChainToCsv(const PosteriorChain& chain);
// Reads the samples back (map/final/tallies are not part of the dump).
std::vector<ChainSample> ParseChainCsv(const std::string& text);

}  // namespace prefcon

#endif  // PREFCON_SAMPLER_H_
