#include "prefcon/likelihood.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace prefcon {

MarginSpec MarginSpec::Zero(std::size_t num_groups) {
  MarginSpec spec;
  spec.num_groups_ = num_groups;
  spec.values_.assign(num_groups * num_groups, 0.0);
  return spec;
}

double MarginSpec::get(std::size_t k, std::size_t l) const {
  if (k >= l || l >= num_groups_) return 0.0;
  return values_[k * num_groups_ + l];
}

void MarginSpec::set(std::size_t k, std::size_t l, double value) {
  if (k >= l || l >= num_groups_) {
    throw InvalidInputError("margin indices must satisfy k < l < K");
  }
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw InvalidInputError("margins must be finite and non-negative");
  }
  values_[k * num_groups_ + l] = value;
}

double MarginSpec::Total() const {
  double total = 0.0;
  for (std::size_t k = 0; k < num_groups_; ++k) {
    for (std::size_t l = k + 1; l < num_groups_; ++l) total += get(k, l);
  }
  return total;
}

std::optional<std::string> MarginAdditivityWarning(const MarginSpec& margins) {
  std::ostringstream out;
  bool any = false;
  const std::size_t K = margins.num_groups();
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t l = k + 1; l < K; ++l) {
      for (std::size_t n = l + 1; n < K; ++n) {
        const double direct = margins.get(k, n);
        const double chained = margins.get(k, l) + margins.get(l, n);
        if (direct + 1e-12 < chained) {
          if (any) out << "; ";
          out << "m" << k + 1 << n + 1 << "=" << direct << " < m" << k + 1
              << l + 1 << "+m" << l + 1 << n + 1 << "=" << chained;
          any = true;
        }
      }
    }
  }
  if (!any) return std::nullopt;
  return "margins are not additive: " + out.str();
}

double PairLogProb(double preferred_reward, double dispreferred_reward,
                   double margin) {
  if (!std::isfinite(preferred_reward) || !std::isfinite(dispreferred_reward) ||
      !std::isfinite(margin)) {
    throw InvalidInputError("pair log-probability needs finite inputs");
  }
  if (margin < 0.0) {
    throw InvalidInputError("margin must be non-negative");
  }
  const double a = preferred_reward - margin;
  const double b = dispreferred_reward;
  const double top = std::max(a, b);
  // log e^a - log(e^a + e^b) with the larger exponent factored out.
  return (a - top) - std::log(std::exp(a - top) + std::exp(b - top));
}

std::vector<PairIndex> EnumeratePairs(const PreferenceDataset& dataset) {
  std::vector<PairIndex> pairs;
  pairs.reserve(dataset.num_pairs());
  for (std::size_t k = 0; k < dataset.num_groups(); ++k) {
    for (std::size_t l = k + 1; l < dataset.num_groups(); ++l) {
      for (std::size_t i = dataset.group_begin(k); i < dataset.group_end(k);
           ++i) {
        for (std::size_t j = dataset.group_begin(l); j < dataset.group_end(l);
             ++j) {
          pairs.push_back({i, j, k, l});
        }
      }
    }
  }
  return pairs;
}

LikelihoodCache::LikelihoodCache(const PreferenceDataset& dataset,
                                 const NominalModel& nominal,
                                 const ConstraintHypothesis& hypothesis,
                                 MarginSpec margins)
    : dataset_(&dataset),
      nominal_(&nominal),
      margins_(std::move(margins)),
      num_groups_(dataset.num_groups()),
      hypothesis_(hypothesis) {
  nominal.Validate();
  hypothesis.Validate();
  if (margins_.num_groups() != num_groups_) {
    throw InvalidInputError("margin spec has " +
                            std::to_string(margins_.num_groups()) +
                            " groups, dataset has " +
                            std::to_string(num_groups_));
  }
  if (nominal.weights.size() != dataset.num_features()) {
    throw InvalidInputError("nominal weights do not match feature dimension");
  }
  if (hypothesis.parametric()) {
    if (!dataset.has_progress()) {
      throw InvalidInputError(
          "parametric hypothesis on a dataset without progress values");
    }
  } else if (hypothesis.size() != dataset.num_features()) {
    throw InvalidInputError("hypothesis dimension does not match features");
  }

  const std::size_t n = dataset.num_trajectories();
  const double beta = nominal.beta;
  nominal_part_.resize(n);
  penalty_part_.resize(n);
  rewards_.resize(n);
  if (hypothesis.parametric()) {
    fractions_.assign(hypothesis.size(), std::vector<double>(n));
    for (std::size_t j = 0; j < hypothesis.size(); ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        fractions_[j][i] = HalfspaceFraction(dataset.sorted_progress(i),
                                             hypothesis.locations[j]);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const FeatureVector& mean = dataset.mean_features(i);
    double nominal_sum = 0.0;
    for (std::size_t f = 0; f < mean.size(); ++f) {
      nominal_sum += nominal.weights[f] * mean[f];
    }
    double penalty_sum = 0.0;
    for (std::size_t j = 0; j < hypothesis.size(); ++j) {
      penalty_sum += hypothesis.EffectiveWeight(j) * FeatureValue(i, j);
    }
    nominal_part_[i] = beta * nominal_sum;
    penalty_part_[i] = beta * penalty_sum;
    rewards_[i] = nominal_part_[i] + penalty_part_[i];
  }

  pairs_ = EnumeratePairs(dataset);
  block_ll_.assign(num_groups_ * num_groups_, 0.0);
  dirty_scratch_.assign(num_groups_, 1);
  RecomputeBlocks(dirty_scratch_);
}

double LikelihoodCache::FeatureValue(std::size_t i, std::size_t j) const {
  return hypothesis_.parametric() ? fractions_[j][i]
                                  : dataset_->mean_features(i)[j];
}

void LikelihoodCache::RecomputeBlocks(const std::vector<char>& dirty_groups) {
  const std::span<const double> rewards(rewards_);
  for (std::size_t k = 0; k < num_groups_; ++k) {
    for (std::size_t l = k + 1; l < num_groups_; ++l) {
      if (!dirty_groups[k] && !dirty_groups[l]) continue;
      block_ll_[BlockSlot(k, l)] = BlockLogLik(
          rewards.subspan(dataset_->group_begin(k), dataset_->group_size(k)),
          rewards.subspan(dataset_->group_begin(l), dataset_->group_size(l)),
          margins_.get(k, l));
    }
  }
  SumBlocks();
}

void LikelihoodCache::SumBlocks() {
  double total = 0.0;
  for (std::size_t k = 0; k < num_groups_; ++k) {
    for (std::size_t l = k + 1; l < num_groups_; ++l) {
      total += block_ll_[BlockSlot(k, l)];
    }
  }
  total_ = total;
}

void LikelihoodCache::UpdateCoordinate(const ConstraintHypothesis& hypothesis,
                                       std::size_t j) {
  const double old_weight = hypothesis_.EffectiveWeight(j);
  hypothesis_.mask[j] = hypothesis.mask[j];
  hypothesis_.weights[j] = hypothesis.weights[j];
  const double delta =
      nominal_->beta * (hypothesis_.EffectiveWeight(j) - old_weight);
  if (delta == 0.0) return;

  std::fill(dirty_scratch_.begin(), dirty_scratch_.end(), 0);
  bool any = false;
  for (std::size_t i = 0; i < rewards_.size(); ++i) {
    const double feature = FeatureValue(i, j);
    if (feature == 0.0) continue;
    penalty_part_[i] += delta * feature;
    rewards_[i] = nominal_part_[i] + penalty_part_[i];
    dirty_scratch_[dataset_->group_of(i)] = 1;
    any = true;
  }
  if (any) RecomputeBlocks(dirty_scratch_);
}

void LikelihoodCache::RefreshParametric(
    const ConstraintHypothesis& hypothesis) {
  if (!hypothesis_.parametric()) return;
  std::fill(dirty_scratch_.begin(), dirty_scratch_.end(), 0);
  bool any = false;
  for (std::size_t j = 0; j < hypothesis_.size(); ++j) {
    if (hypothesis.locations[j] == hypothesis_.locations[j]) continue;
    hypothesis_.locations[j] = hypothesis.locations[j];
    const double scale = nominal_->beta * hypothesis_.EffectiveWeight(j);
    std::vector<double>& column = fractions_[j];
    for (std::size_t i = 0; i < column.size(); ++i) {
      const double updated = HalfspaceFraction(dataset_->sorted_progress(i),
                                                hypothesis_.locations[j]);
      if (updated == column[i]) continue;
      if (scale != 0.0) {
        penalty_part_[i] += scale * (updated - column[i]);
        rewards_[i] = nominal_part_[i] + penalty_part_[i];
        dirty_scratch_[dataset_->group_of(i)] = 1;
        any = true;
      }
      column[i] = updated;
    }
  }
  if (any) RecomputeBlocks(dirty_scratch_);
}

void LikelihoodCache::Checkpoint() {
  saved_.hypothesis = hypothesis_;
  saved_.penalty_part = penalty_part_;
  saved_.rewards = rewards_;
  saved_.fractions = fractions_;
  saved_.block_ll = block_ll_;
  saved_.total = total_;
}

void LikelihoodCache::Rollback() {
  hypothesis_ = saved_.hypothesis;
  penalty_part_ = saved_.penalty_part;
  rewards_ = saved_.rewards;
  fractions_ = saved_.fractions;
  block_ll_ = saved_.block_ll;
  total_ = saved_.total;
}

double DatasetLogLik(const ConstraintHypothesis& hypothesis,
                     const NominalModel& nominal,
                     const PreferenceDataset& dataset,
                     const MarginSpec& margins) {
  return LikelihoodCache(dataset, nominal, hypothesis, margins)
      .log_likelihood();
}

}  // namespace prefcon
