// Grouped, margin-augmented Bradley-Terry log-likelihood.
//
// For tau_i in G_k and tau_j in G_l with k < l the preference tau_i > tau_j
// has probability e^{r_i - m_kl} / (e^{r_i - m_kl} + e^{r_j}), where r is the
// beta-scaled mean reward of a trajectory. The dataset log-likelihood sums the
// log-probabilities over every cross-group pair.

#ifndef PREFCON_LIKELIHOOD_H_
#define PREFCON_LIKELIHOOD_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prefcon/model.h"

namespace prefcon {

// Upper-triangular margins m_kl (k < l, 0-based group indices).
class MarginSpec {
 public:
  MarginSpec() = default;
  static MarginSpec Zero(std::size_t num_groups);

  std::size_t num_groups() const { return num_groups_; }
  double get(std::size_t k, std::size_t l) const;
  // Throws InvalidInputError unless k < l < num_groups and value >= 0.
  void set(std::size_t k, std::size_t l, double value);
  // Sum of all m_kl, k < l.
  double Total() const;

  friend bool operator==(const MarginSpec&, const MarginSpec&) = default;

 private:
  std::size_t num_groups_ = 0;
  std::vector<double> values_;  // row-major K x K, only k < l used
};

// Describes margins that break m_kn >= m_kl + m_ln for some k < l < n, or
// nullopt. Margins are free parameters; this is informational.
std::optional<std::string> MarginAdditivityWarning(const MarginSpec& margins);

// log[e^{r_i - m} / (e^{r_i - m} + e^{r_j})] in max-shifted form. Throws
// InvalidInputError on non-finite input or negative margin.
double PairLogProb(double preferred_reward, double dispreferred_reward,
                   double margin);

struct PairIndex {
  std::size_t preferred;     // trajectory in G_k
  std::size_t dispreferred;  // trajectory in G_l
  std::size_t preferred_group;
  std::size_t dispreferred_group;
};

// Every cross-group pair (i in G_k, j in G_l, k < l), ordered by (k, l, i, j).
std::vector<PairIndex> EnumeratePairs(const PreferenceDataset& dataset);

// Sum over all pairs of the block (G_k, G_l): sum_i sum_j PairLogProb(r_i,
// r_j, margin), vectorized.
double BlockLogLik(std::span<const double> preferred_rewards,
                   std::span<const double> dispreferred_rewards,
                   double margin);

// Cached per-trajectory rewards and per-block log-likelihoods for one
// hypothesis. Single-coordinate and location updates touch only the
// trajectories whose feature is non-zero and re-sum only the affected blocks.
//
// The cache holds references to the dataset and nominal model; both must
// outlive it.
class LikelihoodCache {
 public:
  LikelihoodCache(const PreferenceDataset& dataset,
                  const NominalModel& nominal,
                  const ConstraintHypothesis& hypothesis, MarginSpec margins);

  double log_likelihood() const { return total_; }
  const ConstraintHypothesis& hypothesis() const { return hypothesis_; }
  const MarginSpec& margins() const { return margins_; }

  std::span<const double> nominal_part() const { return nominal_part_; }
  std::span<const double> penalty_part() const { return penalty_part_; }
  std::span<const double> rewards() const { return rewards_; }
  const std::vector<PairIndex>& pair_index() const { return pairs_; }

  // `hypothesis` may differ from the cached one only in mask[j]/weights[j].
  // penalty_part[i] += beta * delta(c_p[j] w_p[j]) * feature_ij.
  void UpdateCoordinate(const ConstraintHypothesis& hypothesis, std::size_t j);

  // Recomputes the halfspace fractions of every location that changed and
  // the penalty terms that depend on them. No-op when locations are equal.
  void RefreshParametric(const ConstraintHypothesis& hypothesis);

  // Saves the mutable state so that a rejected proposal can be undone.
  void Checkpoint();
  void Rollback();

 private:
  std::size_t BlockSlot(std::size_t k, std::size_t l) const {
    return k * num_groups_ + l;
  }
  double FeatureValue(std::size_t i, std::size_t j) const;
  void RecomputeBlocks(const std::vector<char>& dirty_groups);
  void SumBlocks();

  struct State {
    ConstraintHypothesis hypothesis;
    std::vector<double> penalty_part;
    std::vector<double> rewards;
    std::vector<std::vector<double>> fractions;
    std::vector<double> block_ll;
    double total = 0.0;
  };

  const PreferenceDataset* dataset_;
  const NominalModel* nominal_;
  MarginSpec margins_;
  std::size_t num_groups_;
  ConstraintHypothesis hypothesis_;
  std::vector<double> nominal_part_;
  std::vector<double> penalty_part_;
  std::vector<double> rewards_;
  // fractions_[j][i]: share of trajectory i's steps with progress >= theta_j.
  std::vector<std::vector<double>> fractions_;
  std::vector<double> block_ll_;
  double total_ = 0.0;
  std::vector<PairIndex> pairs_;
  State saved_;
  std::vector<char> dirty_scratch_;
};

// Builds a fresh cache and returns its log-likelihood.
double DatasetLogLik(const ConstraintHypothesis& hypothesis,
                     const NominalModel& nominal,
                     const PreferenceDataset& dataset,
                     const MarginSpec& margins);

}  // namespace prefcon

#endif  // PREFCON_LIKELIHOOD_H_
