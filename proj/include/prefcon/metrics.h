// Evaluation: constraint-location error, recovery reports, per-group reward
// distributions and chain diagnostics, each with a CSV emitter.

#ifndef PREFCON_METRICS_H_
#define PREFCON_METRICS_H_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "prefcon/model.h"
#include "prefcon/sampler.h"

namespace prefcon {

// Mean and population std of the per-seed squared errors (theta_hat - theta*)^2.
struct CmseResult {
  double mean = 0.0;
  double stddev = 0.0;
};
CmseResult Cmse(std::span<const double> estimates, double truth);

struct FeatureRecovery {
  int true_mask = 0;
  int map_mask = 0;
  double true_weight = 0.0;
  double map_weight = 0.0;
};

struct RecoveryReport {
  std::vector<FeatureRecovery> features;
  double mask_accuracy = 0.0;
  // RMSE of the effective MAP weight c*w against the true weight, over the
  // features that are truly active. Zero when none are.
  double active_weight_rmse = 0.0;
};

RecoveryReport MakeRecoveryReport(const ConstraintHypothesis& map,
                                  std::span<const int> true_mask,
                                  std::span<const double> true_weights);

struct GroupRewardStats {
  std::size_t group = 0;
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> rewards;  // per trajectory, dataset order
};

std::vector<GroupRewardStats> GroupRewardDistribution(
    const ConstraintHypothesis& hypothesis, const NominalModel& nominal,
    const PreferenceDataset& dataset);

struct ChainSummary {
  std::string algorithm;
  std::array<std::int64_t, kNumProposalKinds> proposals{};
  std::array<double, kNumProposalKinds> acceptance_rate{};
  std::size_t post_burn_in_samples = 0;
  std::vector<double> mask_frequency;
  std::vector<double> weight_mean;
  std::vector<double> weight_std;
  std::vector<double> location_mean;
  std::vector<double> location_std;
  double loglik_min = 0.0;
  double loglik_max = 0.0;
  double map_loglik = 0.0;
};

ChainSummary SummarizeChain(const PosteriorChain& chain);

std::string CmseToCsv(std::span<const double> estimates, double truth);
std::string RecoveryReportToCsv(const RecoveryReport& report);
std::string GroupRewardDistributionToCsv(
    const std::vector<GroupRewardStats>& groups);
std::string ChainSummaryToCsv(const ChainSummary& summary);

}  // namespace prefcon

#endif  // PREFCON_METRICS_H_
