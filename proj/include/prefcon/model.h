// Domain types for preference-based constraint inference: trajectories,
// constraint hypotheses, the masked linear reward and grouped datasets.

#ifndef PREFCON_MODEL_H_
#define PREFCON_MODEL_H_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace prefcon {

// Raised for malformed arguments or data (dimension mismatch, empty input).
class InvalidInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Per-state feature activations phi(s).
using FeatureVector = std::vector<double>;

// A demonstration: one feature vector per step plus an optional scalar
// progress coordinate per step (used only by parametric halfspace features).
class Trajectory {
 public:
  Trajectory() = default;
  // Throws InvalidInputError on empty steps, ragged rows, or a progress
  // column whose length differs from the number of steps.
  explicit Trajectory(std::vector<FeatureVector> steps,
                      std::vector<double> progress = {});

  std::size_t length() const { return steps_.size(); }
  std::size_t num_features() const {
    return steps_.empty() ? 0 : steps_.front().size();
  }
  bool has_progress() const { return !progress_.empty(); }

  const std::vector<FeatureVector>& steps() const { return steps_; }
  const std::vector<double>& progress() const { return progress_; }

 private:
  std::vector<FeatureVector> steps_;
  std::vector<double> progress_;
};

// theta = {c_p, w_p, vartheta}. In the fixed-feature case the mask and weights
// index the observed features; in the parametric case they index the
// halfspace features and `locations` holds one threshold per feature.
struct ConstraintHypothesis {
  std::vector<int> mask;
  std::vector<double> weights;
  std::vector<double> locations;

  std::size_t size() const { return mask.size(); }
  bool parametric() const { return !locations.empty(); }

  // Throws InvalidInputError unless mask and weights agree in length, every
  // mask entry is 0 or 1, and locations is empty or matches the mask length.
  void Validate() const;

  // c_p[j] * w_p[j].
  double EffectiveWeight(std::size_t j) const {
    return mask[j] != 0 ? weights[j] : 0.0;
  }

  static ConstraintHypothesis Zero(std::size_t num_features);
  static ConstraintHypothesis AllActive(std::vector<double> weights);

  friend bool operator==(const ConstraintHypothesis&,
                         const ConstraintHypothesis&) = default;
};

// Known nominal weights w_n and the Bradley-Terry inverse temperature.
struct NominalModel {
  std::vector<double> weights;
  double beta = 1.0;

  void Validate() const;
};

// (1/T) sum_t phi(s_t).
FeatureVector TrajectoryMeanFeatures(const Trajectory& trajectory);

// beta * (w_n + c_p o w_p)^T mean_phi. Requires a fixed-feature hypothesis of
// the same dimension as the nominal weights.
double MeanReward(const ConstraintHypothesis& hypothesis,
                  const NominalModel& nominal,
                  std::span<const double> mean_features);

// Fraction of steps with progress >= threshold, by binary search over an
// ascending copy of the progress column.
double HalfspaceFraction(std::span<const double> sorted_progress,
                         double threshold);

// One halfspace indicator 1[z >= theta_j] per threshold, averaged over the
// trajectory. Throws InvalidInputError when the trajectory has no progress.
FeatureVector ParametricMeanFeatures(const Trajectory& trajectory,
                                     std::span<const double> thresholds);

// Trajectories partitioned into ordered groups G_1 > G_2 > ... > G_K, stored
// contiguously in group order, with per-trajectory caches.
class PreferenceDataset {
 public:
  // Throws InvalidInputError for fewer than two groups, an empty group, or
  // trajectories of differing feature dimension.
  explicit PreferenceDataset(std::vector<std::vector<Trajectory>> groups);

  std::size_t num_groups() const { return group_offsets_.size() - 1; }
  std::size_t num_trajectories() const { return trajectories_.size(); }
  std::size_t num_features() const { return num_features_; }
  bool has_progress() const { return has_progress_; }

  std::size_t group_begin(std::size_t g) const { return group_offsets_[g]; }
  std::size_t group_end(std::size_t g) const { return group_offsets_[g + 1]; }
  std::size_t group_size(std::size_t g) const {
    return group_end(g) - group_begin(g);
  }
  std::size_t group_of(std::size_t i) const { return group_index_[i]; }

  const Trajectory& trajectory(std::size_t i) const { return trajectories_[i]; }
  const FeatureVector& mean_features(std::size_t i) const {
    return mean_features_[i];
  }
  // Ascending progress values of trajectory i (empty without progress).
  std::span<const double> sorted_progress(std::size_t i) const {
    return sorted_progress_[i];
  }
  // Smallest and largest progress value across the dataset.
  double min_progress() const { return min_progress_; }
  double max_progress() const { return max_progress_; }

  // Number of cross-group preference pairs, sum_{k<l} |G_k| |G_l|.
  std::size_t num_pairs() const;

 private:
  std::vector<Trajectory> trajectories_;
  std::vector<std::size_t> group_offsets_;
  std::vector<std::size_t> group_index_;
  std::vector<FeatureVector> mean_features_;
  std::vector<std::vector<double>> sorted_progress_;
  std::size_t num_features_ = 0;
  bool has_progress_ = false;
  double min_progress_ = 0.0;
  double max_progress_ = 0.0;
};

// Per-trajectory beta-scaled mean reward. Fixed-feature hypotheses use the
// trajectory feature means; parametric hypotheses add the halfspace terms.
double TrajectoryReward(const ConstraintHypothesis& hypothesis,
                        const NominalModel& nominal,
                        const PreferenceDataset& dataset, std::size_t i);

}  // namespace prefcon

#endif  // PREFCON_MODEL_H_
