#include "prefcon/model.h"

#include <algorithm>
#include <cmath>
#include <utility>

namespace prefcon {

Trajectory::Trajectory(std::vector<FeatureVector> steps,
                       std::vector<double> progress)
    : steps_(std::move(steps)), progress_(std::move(progress)) {
  if (steps_.empty()) {
    throw InvalidInputError("trajectory has no steps");
  }
  const std::size_t width = steps_.front().size();
  if (width == 0) {
    throw InvalidInputError("trajectory steps have no features");
  }
  for (const FeatureVector& step : steps_) {
    if (step.size() != width) {
      throw InvalidInputError("trajectory steps differ in feature count");
    }
  }
  if (!progress_.empty() && progress_.size() != steps_.size()) {
    throw InvalidInputError("progress column length " +
                            std::to_string(progress_.size()) +
                            " does not match step count " +
                            std::to_string(steps_.size()));
  }
}

void ConstraintHypothesis::Validate() const {
  if (mask.size() != weights.size()) {
    throw InvalidInputError("hypothesis mask and weights differ in length");
  }
  for (int bit : mask) {
    if (bit != 0 && bit != 1) {
      throw InvalidInputError("hypothesis mask entries must be 0 or 1");
    }
  }
  if (!locations.empty() && locations.size() != mask.size()) {
    throw InvalidInputError(
        "parametric hypothesis needs one location per feature");
  }
}

ConstraintHypothesis ConstraintHypothesis::Zero(std::size_t num_features) {
  return {std::vector<int>(num_features, 0),
          std::vector<double>(num_features, 0.0),
          {}};
}

ConstraintHypothesis ConstraintHypothesis::AllActive(
    std::vector<double> weights) {
  ConstraintHypothesis h;
  h.mask.assign(weights.size(), 1);
  h.weights = std::move(weights);
  return h;
}

void NominalModel::Validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InvalidInputError("beta must be a positive finite number");
  }
}

FeatureVector TrajectoryMeanFeatures(const Trajectory& trajectory) {
  if (trajectory.length() == 0) {
    throw InvalidInputError("cannot average an empty trajectory");
  }
  FeatureVector mean(trajectory.num_features(), 0.0);
  for (const FeatureVector& step : trajectory.steps()) {
    for (std::size_t f = 0; f < mean.size(); ++f) mean[f] += step[f];
  }
  const double inv_length = 1.0 / static_cast<double>(trajectory.length());
  for (double& value : mean) value *= inv_length;
  return mean;
}

double MeanReward(const ConstraintHypothesis& hypothesis,
                  const NominalModel& nominal,
                  std::span<const double> mean_features) {
  const std::size_t n = mean_features.size();
  if (hypothesis.mask.size() != n || hypothesis.weights.size() != n ||
      nominal.weights.size() != n) {
    throw InvalidInputError("reward dimensions disagree: features " +
                            std::to_string(n) + ", mask " +
                            std::to_string(hypothesis.mask.size()) +
                            ", nominal " +
                            std::to_string(nominal.weights.size()));
  }
  double total = 0.0;
  for (std::size_t f = 0; f < n; ++f) {
    total += (nominal.weights[f] + hypothesis.EffectiveWeight(f)) *
             mean_features[f];
  }
  return nominal.beta * total;
}

double HalfspaceFraction(std::span<const double> sorted_progress,
                         double threshold) {
  if (sorted_progress.empty()) return 0.0;
  auto first_violation = std::lower_bound(sorted_progress.begin(),
                                          sorted_progress.end(), threshold);
  const auto violating = sorted_progress.end() - first_violation;
  return static_cast<double>(violating) /
         static_cast<double>(sorted_progress.size());
}

FeatureVector ParametricMeanFeatures(const Trajectory& trajectory,
                                     std::span<const double> thresholds) {
  if (!trajectory.has_progress()) {
    throw InvalidInputError("trajectory carries no progress column");
  }
  std::vector<double> sorted = trajectory.progress();
  std::sort(sorted.begin(), sorted.end());
  FeatureVector out;
  out.reserve(thresholds.size());
  for (double threshold : thresholds) {
    out.push_back(HalfspaceFraction(sorted, threshold));
  }
  return out;
}

PreferenceDataset::PreferenceDataset(
    std::vector<std::vector<Trajectory>> groups) {
  if (groups.size() < 2) {
    throw InvalidInputError("a preference dataset needs at least two groups");
  }
  group_offsets_.push_back(0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) {
      throw InvalidInputError("group " + std::to_string(g + 1) + " is empty");
    }
    for (Trajectory& traj : groups[g]) {
      trajectories_.push_back(std::move(traj));
      group_index_.push_back(g);
    }
    group_offsets_.push_back(trajectories_.size());
  }

  num_features_ = trajectories_.front().num_features();
  has_progress_ = trajectories_.front().has_progress();
  for (const Trajectory& traj : trajectories_) {
    if (traj.num_features() != num_features_) {
      throw InvalidInputError("trajectories differ in feature dimension");
    }
    if (traj.has_progress() != has_progress_) {
      throw InvalidInputError(
          "either every trajectory carries progress or none does");
    }
  }

  mean_features_.reserve(trajectories_.size());
  sorted_progress_.reserve(trajectories_.size());
  bool first = true;
  for (const Trajectory& traj : trajectories_) {
    mean_features_.push_back(TrajectoryMeanFeatures(traj));
    std::vector<double> sorted = traj.progress();
    std::sort(sorted.begin(), sorted.end());
    if (!sorted.empty()) {
      min_progress_ = first ? sorted.front()
                            : std::min(min_progress_, sorted.front());
      max_progress_ = first ? sorted.back()
                            : std::max(max_progress_, sorted.back());
      first = false;
    }
    sorted_progress_.push_back(std::move(sorted));
  }
}

std::size_t PreferenceDataset::num_pairs() const {
  std::size_t pairs = 0;
  for (std::size_t k = 0; k < num_groups(); ++k) {
    for (std::size_t l = k + 1; l < num_groups(); ++l) {
      pairs += group_size(k) * group_size(l);
    }
  }
  return pairs;
}

double TrajectoryReward(const ConstraintHypothesis& hypothesis,
                        const NominalModel& nominal,
                        const PreferenceDataset& dataset, std::size_t i) {
  const FeatureVector& mean = dataset.mean_features(i);
  if (!hypothesis.parametric()) {
    return MeanReward(hypothesis, nominal, mean);
  }
  if (nominal.weights.size() != mean.size()) {
    throw InvalidInputError("nominal weights do not match feature dimension");
  }
  if (!dataset.has_progress()) {
    throw InvalidInputError("parametric hypothesis on a dataset without "
                            "progress values");
  }
  double total = 0.0;
  for (std::size_t f = 0; f < mean.size(); ++f) {
    total += nominal.weights[f] * mean[f];
  }
  for (std::size_t j = 0; j < hypothesis.size(); ++j) {
    total += hypothesis.EffectiveWeight(j) *
             HalfspaceFraction(dataset.sorted_progress(i),
                               hypothesis.locations[j]);
  }
  return nominal.beta * total;
}

}  // namespace prefcon
