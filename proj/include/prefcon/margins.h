// Grid-search tuning of the group margins m_kl.
//
// Each candidate margin set is scored by running the constraint sampler,
// computing the gaps between consecutive group mean rewards under the MAP
// hypothesis, and comparing the gap ratios gap[k+1] / gap[k] with the
// demonstrator's stated ratios in log space.

#ifndef PREFCON_MARGINS_H_
#define PREFCON_MARGINS_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "prefcon/likelihood.h"
#include "prefcon/model.h"
#include "prefcon/sampler.h"

namespace prefcon {

class TuningFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MarginTarget {
  // ratios[k] = desired gap(G_{k+2}, G_{k+3}) / gap(G_{k+1}, G_{k+2}),
  // K - 2 entries for K groups.
  std::vector<double> ratios;
  // Relative tolerance used only to flag whether the winner is acceptable.
  double tolerance = 0.5;

  void Validate(std::size_t num_groups) const;
};

// gap[k] = mean reward over G_k - mean reward over G_{k+1}, K - 1 entries.
std::vector<double> GroupRewardGaps(const ConstraintHypothesis& hypothesis,
                                    const NominalModel& nominal,
                                    const PreferenceDataset& dataset);

// sum_k (log(gap[k+1]/gap[k]) - log(ratio[k]))^2, or +inf when any gap is not
// positive (groups out of order).
double GapRatioError(const std::vector<double>& gaps,
                     const MarginTarget& target);

// Per-pair values {0, 0.5, 1, 1.5, 2, 2.9, 4, 6}; for K = 3 the Cartesian
// product over (m12, m23, m13) keeping m13 >= max(m12, m23). In general every
// non-adjacent m_kl must be at least the largest margin it spans.
std::vector<MarginSpec> DefaultMarginGrid(std::size_t num_groups);
std::vector<double> DefaultMarginValues();
// Same pruning over arbitrary per-pair values.
std::vector<MarginSpec> MarginGrid(std::size_t num_groups,
                                   const std::vector<double>& values);

struct MarginCandidate {
  MarginSpec margins;
  std::vector<double> gaps;
  double error = 0.0;
  ConstraintHypothesis map;
};

struct MarginTuningResult {
  std::vector<MarginCandidate> candidates;
  std::size_t selected = 0;
  bool within_tolerance = false;
  MarginSpec margins;
  PosteriorChain chain;  // full-length rerun with the selected margins
};

struct TuningOptions {
  // Candidate chains run for this fraction of the configured iterations.
  double candidate_fraction = 0.25;
  int threads = 1;
};

// Throws TuningFailure if no candidate orders the groups, InvalidInputError
// on an empty grid.
MarginTuningResult TuneMargins(const PreferenceDataset& dataset,
                               const NominalModel& nominal,
                               const MarginTarget& target,
                               const std::vector<MarginSpec>& candidates,
                               const SamplerConfig& config,
                               const TuningOptions& options = {});

// Index of the candidate with the smallest error, ties by smaller margin sum
// then by position. Requires at least one finite error.
std::size_t SelectCandidate(const std::vector<MarginCandidate>& candidates);

// "m_12,m_13,...,gap_1,...,error" table of every candidate.
std::string MarginCandidatesToCsv(const MarginTuningResult& result);
// {"1-2": m12, "1-3": m13, ...} keyed by 1-based group indices.
std::string MarginSpecToJson(const MarginSpec& margins);

}  // namespace prefcon

#endif  // PREFCON_MARGINS_H_
