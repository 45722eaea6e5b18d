#include "prefcon/margins.h"

#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include "prefcon/io.h"

namespace prefcon {
namespace {

struct PairSlot {
  std::size_t k;
  std::size_t l;
};

std::vector<PairSlot> UpperPairs(std::size_t num_groups) {
  std::vector<PairSlot> pairs;
  // Adjacent pairs first so that spanning pairs see their bounds filled in.
  for (std::size_t span = 1; span < num_groups; ++span) {
    for (std::size_t k = 0; k + span < num_groups; ++k) {
      pairs.push_back({k, k + span});
    }
  }
  return pairs;
}

void EnumerateGrid(const std::vector<PairSlot>& pairs, std::size_t slot,
                   const std::vector<double>& values, MarginSpec& current,
                   std::vector<MarginSpec>& out) {
  if (slot == pairs.size()) {
    out.push_back(current);
    return;
  }
  const auto [k, l] = pairs[slot];
  double floor = 0.0;
  for (std::size_t a = k; a < l; ++a) {
    for (std::size_t b = a + 1; b <= l; ++b) {
      if (a == k && b == l) continue;
      floor = std::max(floor, current.get(a, b));
    }
  }
  for (double v : values) {
    if (l - k > 1 && v < floor) continue;
    current.set(k, l, v);
    EnumerateGrid(pairs, slot + 1, values, current, out);
  }
  current.set(k, l, 0.0);
}

}  // namespace

void MarginTarget::Validate(std::size_t num_groups) const {
  if (num_groups >= 2 && ratios.size() != num_groups - 2) {
    throw InvalidInputError("margin target needs " +
                            std::to_string(num_groups - 2) +
                            " gap ratios for " + std::to_string(num_groups) +
                            " groups");
  }
  for (double r : ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw InvalidInputError("gap ratios must be positive");
    }
  }
  if (!(tolerance >= 0.0)) {
    throw InvalidInputError("tolerance must be non-negative");
  }
}

std::vector<double> GroupRewardGaps(const ConstraintHypothesis& hypothesis,
                                    const NominalModel& nominal,
                                    const PreferenceDataset& dataset) {
  std::vector<double> means(dataset.num_groups(), 0.0);
  for (std::size_t g = 0; g < dataset.num_groups(); ++g) {
    for (std::size_t i = dataset.group_begin(g); i < dataset.group_end(g);
         ++i) {
      means[g] += TrajectoryReward(hypothesis, nominal, dataset, i);
    }
    means[g] /= static_cast<double>(dataset.group_size(g));
  }
  std::vector<double> gaps;
  for (std::size_t g = 0; g + 1 < means.size(); ++g) {
    gaps.push_back(means[g] - means[g + 1]);
  }
  return gaps;
}

double GapRatioError(const std::vector<double>& gaps,
                     const MarginTarget& target) {
  for (double gap : gaps) {
    if (!(gap > 0.0)) return std::numeric_limits<double>::infinity();
  }
  double error = 0.0;
  for (std::size_t k = 0; k < target.ratios.size(); ++k) {
    const double diff =
        std::log(gaps[k + 1] / gaps[k]) - std::log(target.ratios[k]);
    error += diff * diff;
  }
  return error;
}

std::vector<double> DefaultMarginValues() {
  return {0.0, 0.5, 1.0, 1.5, 2.0, 2.9, 4.0, 6.0};
}

std::vector<MarginSpec> MarginGrid(std::size_t num_groups,
                                   const std::vector<double>& values) {
  if (num_groups < 2) {
    throw InvalidInputError("margin grids need at least two groups");
  }
  if (values.empty()) throw InvalidInputError("margin grid values are empty");
  for (double v : values) {
    if (!(v >= 0.0)) throw InvalidInputError("margins must be non-negative");
  }
  std::vector<MarginSpec> out;
  MarginSpec current = MarginSpec::Zero(num_groups);
  EnumerateGrid(UpperPairs(num_groups), 0, values, current, out);
  return out;
}

std::vector<MarginSpec> DefaultMarginGrid(std::size_t num_groups) {
  return MarginGrid(num_groups, DefaultMarginValues());
}

std::size_t SelectCandidate(const std::vector<MarginCandidate>& candidates) {
  std::size_t best = candidates.size();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (!std::isfinite(candidates[c].error)) continue;
    if (best == candidates.size() || candidates[c].error < candidates[best].error ||
        (candidates[c].error == candidates[best].error &&
         candidates[c].margins.Total() < candidates[best].margins.Total())) {
      best = c;
    }
  }
  if (best == candidates.size()) {
    throw TuningFailure(
        "no margin candidate ordered the groups G_1 > ... > G_K under its MAP "
        "hypothesis");
  }
  return best;
}

MarginTuningResult TuneMargins(const PreferenceDataset& dataset,
                               const NominalModel& nominal,
                               const MarginTarget& target,
                               const std::vector<MarginSpec>& candidates,
                               const SamplerConfig& config,
                               const TuningOptions& options) {
  if (candidates.empty()) {
    throw InvalidInputError("margin candidate grid is empty");
  }
  target.Validate(dataset.num_groups());
  if (!(options.candidate_fraction > 0.0 && options.candidate_fraction <= 1.0)) {
    throw ConfigError("candidate_fraction must lie in (0, 1]");
  }
  config.Validate();

  SamplerConfig short_config = config;
  short_config.iterations = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::llround(
             options.candidate_fraction * static_cast<double>(config.iterations))));
  short_config.thin = std::min(short_config.thin, short_config.iterations);

  MarginTuningResult result;
  result.candidates.resize(candidates.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t c = next.fetch_add(1);
      if (c >= candidates.size()) return;
      try {
        PosteriorChain chain =
            RunPbicrl(dataset, nominal, candidates[c], short_config);
        MarginCandidate& out = result.candidates[c];
        out.margins = candidates[c];
        out.map = chain.map_sample.hypothesis;
        out.gaps = GroupRewardGaps(out.map, nominal, dataset);
        out.error = GapRatioError(out.gaps, target);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(candidates.size());
      }
    }
  };
  const int threads = std::max(1, options.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  result.selected = SelectCandidate(result.candidates);
  result.margins = result.candidates[result.selected].margins;
  result.chain = RunPbicrl(dataset, nominal, result.margins, config);

  const std::vector<double> gaps =
      GroupRewardGaps(result.chain.map_sample.hypothesis, nominal, dataset);
  result.within_tolerance = std::isfinite(GapRatioError(gaps, target));
  for (std::size_t k = 0; result.within_tolerance && k < target.ratios.size();
       ++k) {
    const double achieved = gaps[k + 1] / gaps[k];
    result.within_tolerance =
        std::fabs(achieved / target.ratios[k] - 1.0) <= target.tolerance;
  }
  return result;
}

std::string MarginCandidatesToCsv(const MarginTuningResult& result) {
  std::string out = "# schema: prefcon-margin-candidates/v1\n";
  if (result.candidates.empty()) return out;
  const std::size_t K = result.candidates.front().margins.num_groups();
  out += "candidate";
  for (const PairSlot& p : UpperPairs(K)) {
    out += ",m_" + std::to_string(p.k + 1) + std::to_string(p.l + 1);
  }
  for (std::size_t g = 0; g + 1 < K; ++g) {
    out += ",gap_" + std::to_string(g + 1) + std::to_string(g + 2);
  }
  out += ",error,selected\n";
  for (std::size_t c = 0; c < result.candidates.size(); ++c) {
    const MarginCandidate& cand = result.candidates[c];
    out += std::to_string(c);
    for (const PairSlot& p : UpperPairs(K)) {
      out += "," + FormatDouble(cand.margins.get(p.k, p.l));
    }
    for (double gap : cand.gaps) out += "," + FormatDouble(gap);
    out += "," + FormatDouble(cand.error);
    out += c == result.selected ? ",1\n" : ",0\n";
  }
  return out;
}

std::string MarginSpecToJson(const MarginSpec& margins) {
  std::string out = "{";
  bool first = true;
  for (const PairSlot& p : UpperPairs(margins.num_groups())) {
    if (!first) out += ", ";
    out += "\"" + std::to_string(p.k + 1) + "-" + std::to_string(p.l + 1) +
           "\": " + FormatDouble(margins.get(p.k, p.l));
    first = false;
  }
  return out + "}";
}

}  // namespace prefcon
