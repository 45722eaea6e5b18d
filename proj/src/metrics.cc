#include "prefcon/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "prefcon/io.h"

namespace prefcon {
namespace {

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

Moments PopulationMoments(std::span<const double> values) {
  Moments m;
  if (values.empty()) return m;
  for (double v : values) m.mean += v;
  m.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  m.stddev = std::sqrt(ss / static_cast<double>(values.size()));
  return m;
}

}  // namespace

CmseResult Cmse(std::span<const double> estimates, double truth) {
  if (estimates.empty()) {
    throw InvalidInputError("CMSE needs at least one estimate");
  }
  std::vector<double> errors;
  errors.reserve(estimates.size());
  for (double e : estimates) errors.push_back((e - truth) * (e - truth));
  // Constant inputs give exactly zero spread.
  if (std::all_of(errors.begin(), errors.end(),
                  [&](double v) { return v == errors.front(); })) {
    return {errors.front(), 0.0};
  }
  const Moments m = PopulationMoments(errors);
  return {m.mean, m.stddev};
}

RecoveryReport MakeRecoveryReport(const ConstraintHypothesis& map,
                                  std::span<const int> true_mask,
                                  std::span<const double> true_weights) {
  if (true_mask.size() != map.size() || true_weights.size() != map.size()) {
    throw InvalidInputError("recovery report: dimension mismatch");
  }
  RecoveryReport report;
  std::size_t matches = 0;
  std::size_t active = 0;
  double sq = 0.0;
  for (std::size_t j = 0; j < map.size(); ++j) {
    FeatureRecovery f{true_mask[j], map.mask[j], true_weights[j],
                      map.weights[j]};
    report.features.push_back(f);
    if (f.true_mask == f.map_mask) ++matches;
    if (f.true_mask != 0) {
      const double diff = map.EffectiveWeight(j) - f.true_weight;
      sq += diff * diff;
      ++active;
    }
  }
  report.mask_accuracy =
      map.size() == 0 ? 1.0
                      : static_cast<double>(matches) /
                            static_cast<double>(map.size());
  report.active_weight_rmse =
      active == 0 ? 0.0 : std::sqrt(sq / static_cast<double>(active));
  return report;
}

std::vector<GroupRewardStats> GroupRewardDistribution(
    const ConstraintHypothesis& hypothesis, const NominalModel& nominal,
    const PreferenceDataset& dataset) {
  std::vector<GroupRewardStats> out;
  for (std::size_t g = 0; g < dataset.num_groups(); ++g) {
    GroupRewardStats stats;
    stats.group = g;
    for (std::size_t i = dataset.group_begin(g); i < dataset.group_end(g);
         ++i) {
      stats.rewards.push_back(
          TrajectoryReward(hypothesis, nominal, dataset, i));
    }
    const Moments m = PopulationMoments(stats.rewards);
    stats.mean = m.mean;
    stats.stddev = stats.rewards.size() == 1 ? 0.0 : m.stddev;
    out.push_back(std::move(stats));
  }
  return out;
}

ChainSummary SummarizeChain(const PosteriorChain& chain) {
  ChainSummary s;
  s.algorithm = chain.algorithm;
  s.proposals = chain.proposals;
  for (std::size_t k = 0; k < kNumProposalKinds; ++k) {
    s.acceptance_rate[k] =
        chain.proposals[k] == 0
            ? 0.0
            : static_cast<double>(chain.accepts[k]) /
                  static_cast<double>(chain.proposals[k]);
  }
  s.map_loglik = chain.map_sample.log_likelihood;

  const std::vector<ChainSample> post = chain.PostBurnIn();
  s.post_burn_in_samples = post.size();
  if (post.empty()) return s;

  const ConstraintHypothesis& first = post.front().hypothesis;
  const std::size_t m = first.size();
  const std::size_t nloc = first.locations.size();
  s.mask_frequency.assign(m, 0.0);
  s.weight_mean.assign(m, 0.0);
  s.weight_std.assign(m, 0.0);
  s.location_mean.assign(nloc, 0.0);
  s.location_std.assign(nloc, 0.0);
  s.loglik_min = std::numeric_limits<double>::infinity();
  s.loglik_max = -std::numeric_limits<double>::infinity();

  std::vector<double> column(post.size());
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t t = 0; t < post.size(); ++t) {
      s.mask_frequency[j] += post[t].hypothesis.mask[j];
      column[t] = post[t].hypothesis.weights[j];
    }
    s.mask_frequency[j] /= static_cast<double>(post.size());
    const Moments mw = PopulationMoments(column);
    s.weight_mean[j] = mw.mean;
    s.weight_std[j] = mw.stddev;
  }
  for (std::size_t j = 0; j < nloc; ++j) {
    for (std::size_t t = 0; t < post.size(); ++t) {
      column[t] = post[t].hypothesis.locations[j];
    }
    const Moments ml = PopulationMoments(column);
    s.location_mean[j] = ml.mean;
    s.location_std[j] = ml.stddev;
  }
  for (const ChainSample& sample : post) {
    s.loglik_min = std::min(s.loglik_min, sample.log_likelihood);
    s.loglik_max = std::max(s.loglik_max, sample.log_likelihood);
  }
  // Identical samples must report zero spread regardless of rounding.
  for (std::size_t j = 0; j < m; ++j) {
    const bool constant = std::all_of(post.begin(), post.end(), [&](const auto& p) {
      return p.hypothesis.weights[j] == first.weights[j];
    });
    if (constant) s.weight_std[j] = 0.0;
  }
  for (std::size_t j = 0; j < nloc; ++j) {
    const bool constant = std::all_of(post.begin(), post.end(), [&](const auto& p) {
      return p.hypothesis.locations[j] == first.locations[j];
    });
    if (constant) s.location_std[j] = 0.0;
  }
  return s;
}

std::string CmseToCsv(std::span<const double> estimates, double truth) {
  const CmseResult r = Cmse(estimates, truth);
  std::string out =
      "# schema: prefcon-cmse/v1 convention=mean_and_population_std_of_squared_error\n"
      "seed_index,theta_hat,theta_star,squared_error\n";
  for (std::size_t s = 0; s < estimates.size(); ++s) {
    const double e = estimates[s] - truth;
    out += std::to_string(s) + "," + FormatDouble(estimates[s]) + "," +
           FormatDouble(truth) + "," + FormatDouble(e * e) + "\n";
  }
  out += "mean,,," + FormatDouble(r.mean) + "\n";
  out += "std,,," + FormatDouble(r.stddev) + "\n";
  return out;
}

std::string RecoveryReportToCsv(const RecoveryReport& report) {
  std::string out =
      "# schema: prefcon-recovery/v1 mask_accuracy=" +
      FormatDouble(report.mask_accuracy) +
      " active_weight_rmse=" + FormatDouble(report.active_weight_rmse) +
      "\nfeature,c_true,c_map,w_true,w_map\n";
  for (std::size_t j = 0; j < report.features.size(); ++j) {
    const FeatureRecovery& f = report.features[j];
    out += std::to_string(j + 1) + "," + std::to_string(f.true_mask) + "," +
           std::to_string(f.map_mask) + "," + FormatDouble(f.true_weight) +
           "," + FormatDouble(f.map_weight) + "\n";
  }
  return out;
}

std::string GroupRewardDistributionToCsv(
    const std::vector<GroupRewardStats>& groups) {
  std::string out = "# schema: prefcon-group-rewards/v1";
  for (const GroupRewardStats& g : groups) {
    out += " g" + std::to_string(g.group + 1) + "_mean=" +
           FormatDouble(g.mean) + " g" + std::to_string(g.group + 1) +
           "_std=" + FormatDouble(g.stddev);
  }
  out += "\ngroup,index,reward\n";
  for (const GroupRewardStats& g : groups) {
    for (std::size_t i = 0; i < g.rewards.size(); ++i) {
      out += std::to_string(g.group + 1) + "," + std::to_string(i) + "," +
             FormatDouble(g.rewards[i]) + "\n";
    }
  }
  return out;
}

std::string ChainSummaryToCsv(const ChainSummary& s) {
  std::string out = "# schema: prefcon-chain-summary/v1 algorithm=" +
                    s.algorithm + "\nstatistic,index,value\n";
  auto row = [&](const std::string& name, std::size_t index, double v) {
    out += name + "," + std::to_string(index) + "," + FormatDouble(v) + "\n";
  };
  for (std::size_t k = 0; k < kNumProposalKinds; ++k) {
    if (s.proposals[k] == 0) continue;
    row(std::string("acceptance_") +
            ProposalKindName(static_cast<ProposalKind>(k)),
        0, s.acceptance_rate[k]);
  }
  row("post_burn_in_samples", 0, static_cast<double>(s.post_burn_in_samples));
  for (std::size_t j = 0; j < s.mask_frequency.size(); ++j) {
    row("c_frequency", j + 1, s.mask_frequency[j]);
  }
  for (std::size_t j = 0; j < s.weight_mean.size(); ++j) {
    row("w_mean", j + 1, s.weight_mean[j]);
    row("w_std", j + 1, s.weight_std[j]);
  }
  for (std::size_t j = 0; j < s.location_mean.size(); ++j) {
    row("theta_mean", j + 1, s.location_mean[j]);
    row("theta_std", j + 1, s.location_std[j]);
  }
  if (s.post_burn_in_samples > 0) {
    row("loglik_min", 0, s.loglik_min);
    row("loglik_max", 0, s.loglik_max);
  }
  row("map_loglik", 0, s.map_loglik);
  return out;
}

}  // namespace prefcon
