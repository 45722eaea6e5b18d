#include "prefcon/envs.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace prefcon {
namespace {

constexpr int kMaxAttempts = 1000;

double Distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    sum += (a[d] - b[d]) * (a[d] - b[d]);
  }
  return std::sqrt(sum);
}

std::mt19937_64 DemoRng(std::uint64_t seed, std::size_t group,
                        std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(group),
                    static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

struct NavigationRollout {
  std::vector<FeatureVector> steps;
  bool reached_goal = false;
};

NavigationRollout RollOut(const NavigationWorld& world, DemoQuality quality,
                          std::mt19937_64& rng) {
  const std::size_t dim = world.dim();
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, world.step_noise);

  std::vector<double> position(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    position[d] = world.start_center[d] + world.start_jitter * jitter(rng);
  }
  std::vector<std::vector<double>> route;
  std::vector<double> via = world.waypoints[static_cast<int>(quality)];
  for (double& x : via) x += world.waypoint_jitter * jitter(rng);
  route.push_back(std::move(via));
  route.push_back(world.goal_center);

  NavigationRollout rollout;
  std::size_t leg = 0;
  for (int t = 0; t < world.max_steps; ++t) {
    rollout.steps.push_back(NavigationFeatures(position, world));
    if (Distance(position, world.goal_center) <= world.goal_radius) {
      rollout.reached_goal = true;
      break;
    }
    if (leg + 1 < route.size() &&
        Distance(position, route[leg]) <= world.waypoint_radius) {
      ++leg;
    }
    const std::vector<double>& target = route[leg];
    const double remaining = Distance(position, target);
    const double advance = std::min(world.step_size, remaining);
    for (std::size_t d = 0; d < dim; ++d) {
      const double heading =
          remaining > 0.0 ? (target[d] - position[d]) / remaining : 0.0;
      position[d] = std::clamp(position[d] + advance * heading + noise(rng),
                               0.0, 1.0);
    }
  }
  return rollout;
}

bool SatisfiesQuality(const NavigationRollout& rollout, DemoQuality quality) {
  double orange = 0.0;
  double red = 0.0;
  for (const FeatureVector& step : rollout.steps) {
    orange += step[1];
    red += step[2];
  }
  switch (quality) {
    case DemoQuality::kGood:
      return rollout.reached_goal && orange == 0.0 && red == 0.0;
    case DemoQuality::kBad:
      return rollout.reached_goal && orange > 0.0 && red == 0.0;
    case DemoQuality::kVeryBad:
      return rollout.reached_goal && red > 0.0 && orange == 0.0;
  }
  return false;
}

}  // namespace

const char* DemoQualityName(DemoQuality quality) {
  switch (quality) {
    case DemoQuality::kGood:
      return "good";
    case DemoQuality::kBad:
      return "bad";
    case DemoQuality::kVeryBad:
      return "very_bad";
  }
  return "unknown";
}

bool Box::Contains(std::span<const double> point) const {
  for (std::size_t d = 0; d < point.size(); ++d) {
    if (point[d] < lower[d] || point[d] > upper[d]) return false;
  }
  return true;
}

std::vector<double> NavigationWorld::penalty_weights() const {
  std::vector<double> out(true_weights.size());
  for (std::size_t f = 0; f < out.size(); ++f) {
    out[f] = true_weights[f] - nominal_weights[f];
  }
  return out;
}

std::vector<int> NavigationWorld::true_mask() const {
  std::vector<int> mask;
  for (double w : penalty_weights()) mask.push_back(w != 0.0 ? 1 : 0);
  return mask;
}

NavigationWorld NavigationWorld::PointMass() {
  NavigationWorld world;
  world.name = "pointmass";
  world.goal_center = {0.85, 0.85};
  world.goal_radius = 0.06;
  world.orange = {{0.75, 0.42}, {0.91, 0.62}};
  world.red = {{0.42, 0.72}, {0.52, 0.80}};
  world.true_weights = {1.0, -10.0, -100.0, -1.0};
  world.nominal_weights = {1.0, 0.0, 0.0, -1.0};
  world.start_center = {0.1, 0.1};
  world.waypoints = {{0.77, 0.96}, {0.83, 0.52}, {0.47, 0.76}};
  return world;
}

NavigationWorld NavigationWorld::Reach() {
  NavigationWorld world;
  world.name = "reach";
  world.goal_center = {0.85, 0.85, 0.6};
  world.goal_radius = 0.06;
  world.orange = {{0.75, 0.42, 0.0}, {0.91, 0.62, 1.0}};
  world.red = {{0.43, 0.72, 0.0}, {0.51, 0.80, 1.0}};
  world.true_weights = {0.1, -20.0, -100.0, -5.0};
  world.nominal_weights = {0.1, 0.0, 0.0, -5.0};
  world.start_center = {0.1, 0.1, 0.3};
  world.waypoints = {{0.77, 0.96, 0.55}, {0.83, 0.52, 0.45},
                     {0.47, 0.76, 0.5}};
  return world;
}

void NavigationWorld::Validate() const {
  const std::size_t d = dim();
  if (d == 0 || orange.lower.size() != d || orange.upper.size() != d ||
      red.lower.size() != d || red.upper.size() != d ||
      start_center.size() != d || waypoints.size() != 3) {
    throw InvalidInputError("navigation world geometry has mixed dimensions");
  }
  for (const auto& w : waypoints) {
    if (w.size() != d) {
      throw InvalidInputError("waypoint dimension mismatch");
    }
  }
  if (true_weights.size() != 4 || nominal_weights.size() != 4) {
    throw InvalidInputError("navigation worlds have exactly four features");
  }
  for (const Box* box : {&orange, &red}) {
    for (std::size_t k = 0; k < d; ++k) {
      if (box->lower[k] < 0.0 || box->upper[k] > 1.0 ||
          box->lower[k] >= box->upper[k]) {
        throw InvalidInputError("constraint regions must lie in [0,1]^d");
      }
    }
  }
  // The goal ball must not touch either region.
  for (const Box* box : {&orange, &red}) {
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double nearest =
          std::clamp(goal_center[k], box->lower[k], box->upper[k]);
      sq += (goal_center[k] - nearest) * (goal_center[k] - nearest);
    }
    if (std::sqrt(sq) <= goal_radius) {
      throw InvalidInputError("goal overlaps a constraint region");
    }
  }
  if (!(inverse_distance_cap > 0.0) || max_steps < 1 || !(step_size > 0.0)) {
    throw InvalidInputError("invalid controller parameters");
  }
}

LocomotionWorld LocomotionWorld::HalfCheetahAnalog() {
  LocomotionWorld world;
  world.name = "halfcheetah";
  world.theta_star = 8.0;
  world.penalty = -50.0;
  world.action_dim = 6;
  return world;
}

LocomotionWorld LocomotionWorld::AntAnalog() {
  LocomotionWorld world;
  world.name = "ant";
  world.theta_star = 10.0;
  world.penalty = -100.0;
  world.action_dim = 8;
  return world;
}

void LocomotionWorld::Validate() const {
  if (!(theta_star > 0.0)) throw InvalidInputError("theta_star must be > 0");
  if (nominal_weights.size() != 2) {
    throw InvalidInputError("locomotion nominal weights have two entries");
  }
  if (episode_length < 2 || !(gap >= 0.0) || !(good_spread > 0.0) ||
      !(bad_overshoot_min > 0.0) || bad_overshoot_max < bad_overshoot_min ||
      theta_star - gap - good_spread <= 0.0 || action_dim < 1) {
    throw InvalidInputError("invalid locomotion world parameters");
  }
}

FeatureVector NavigationFeatures(std::span<const double> position,
                                 const NavigationWorld& world) {
  const double distance = Distance(position, world.goal_center);
  const double inverse =
      distance > 0.0 ? std::min(1.0 / distance, world.inverse_distance_cap)
                     : world.inverse_distance_cap;
  return {inverse, world.orange.Contains(position) ? 1.0 : 0.0,
          world.red.Contains(position) ? 1.0 : 0.0,
          distance > world.goal_radius ? 1.0 : 0.0};
}

double NavigationTrueReward(const Trajectory& trajectory,
                            const NavigationWorld& world) {
  const FeatureVector mean = TrajectoryMeanFeatures(trajectory);
  return std::inner_product(mean.begin(), mean.end(),
                            world.true_weights.begin(), 0.0);
}

double LocomotionTrueReward(const Trajectory& trajectory,
                            const LocomotionWorld& world) {
  const FeatureVector mean = TrajectoryMeanFeatures(trajectory);
  double reward = world.nominal_weights[0] * mean[0] +
                  world.nominal_weights[1] * mean[1];
  std::vector<double> sorted = trajectory.progress();
  std::sort(sorted.begin(), sorted.end());
  reward += world.penalty * HalfspaceFraction(sorted, world.theta_star);
  return reward;
}

Trajectory GenerateDemo(const NavigationWorld& world, DemoQuality quality,
                        std::mt19937_64& rng) {
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    NavigationRollout rollout = RollOut(world, quality, rng);
    if (SatisfiesQuality(rollout, quality)) {
      return Trajectory(std::move(rollout.steps));
    }
  }
  throw InvalidInputError(std::string("world '") + world.name +
                          "' cannot produce a " + DemoQualityName(quality) +
                          " demonstration");
}

Trajectory GenerateDemo(const LocomotionWorld& world, DemoQuality quality,
                        std::mt19937_64& rng) {
  if (quality == DemoQuality::kVeryBad) {
    throw InvalidInputError("locomotion demos are either good or bad");
  }
  const int length = world.episode_length;
  const double ceiling = world.theta_star - world.gap;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, world.progress_noise);
  std::normal_distribution<double> action(0.0, world.action_noise);

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const double start = 0.5 * unit(rng);
    double stop = 0.0;
    if (quality == DemoQuality::kGood) {
      stop = ceiling - world.good_spread * (1.0 - unit(rng));
    } else {
      stop = world.theta_star + world.bad_overshoot_min +
             (world.bad_overshoot_max - world.bad_overshoot_min) * unit(rng);
    }
    // Reach the stopping point after 60-90% of the episode, then idle.
    const double arrival = (0.6 + 0.3 * unit(rng)) * length;
    const double speed = (stop - start) / arrival;

    std::vector<FeatureVector> steps;
    std::vector<double> progress;
    steps.reserve(length);
    progress.reserve(length);
    double z = start;
    double previous = start;
    double furthest = start;
    for (int t = 0; t < length; ++t) {
      const double moving = z < stop ? speed : 0.0;
      z = std::max(z + moving + noise(rng), 0.0);
      if (quality == DemoQuality::kGood) z = std::min(z, stop);
      double action_sq = 0.0;
      for (int a = 0; a < world.action_dim; ++a) {
        const double component = 10.0 * moving + action(rng);
        action_sq += component * component;
      }
      steps.push_back({z - previous, action_sq});
      progress.push_back(z);
      previous = z;
      furthest = std::max(furthest, z);
    }
    const bool ok = quality == DemoQuality::kGood ? furthest < ceiling
                                                  : furthest > world.theta_star;
    if (ok) return Trajectory(std::move(steps), std::move(progress));
  }
  throw InvalidInputError(std::string("world '") + world.name +
                          "' cannot produce a " + DemoQualityName(quality) +
                          " demonstration");
}

PreferenceDataset BuildDataset(const NavigationWorld& world,
                               std::span<const std::size_t> counts,
                               std::uint64_t seed) {
  world.Validate();
  if (counts.size() != 3) {
    throw InvalidInputError("navigation datasets have three groups");
  }
  std::vector<std::vector<Trajectory>> groups(3);
  for (std::size_t g = 0; g < 3; ++g) {
    if (counts[g] == 0) {
      throw InvalidInputError("group " + std::to_string(g + 1) +
                              " needs at least one demonstration");
    }
    for (std::size_t i = 0; i < counts[g]; ++i) {
      std::mt19937_64 rng = DemoRng(seed, g, i);
      groups[g].push_back(
          GenerateDemo(world, static_cast<DemoQuality>(g), rng));
    }
  }
  return PreferenceDataset(std::move(groups));
}

PreferenceDataset BuildDataset(const LocomotionWorld& world,
                               std::span<const std::size_t> counts,
                               std::uint64_t seed) {
  world.Validate();
  if (counts.size() != 2) {
    throw InvalidInputError("locomotion datasets have two groups");
  }
  std::vector<std::vector<Trajectory>> groups(2);
  for (std::size_t g = 0; g < 2; ++g) {
    if (counts[g] == 0) {
      throw InvalidInputError("group " + std::to_string(g + 1) +
                              " needs at least one demonstration");
    }
    for (std::size_t i = 0; i < counts[g]; ++i) {
      std::mt19937_64 rng = DemoRng(seed, g, i);
      groups[g].push_back(
          GenerateDemo(world, static_cast<DemoQuality>(g), rng));
    }
  }
  return PreferenceDataset(std::move(groups));
}

GridScenario Grid3x3Scenario() {
  // Cells (col, row) from the start (0,0) to the goal (2,2). Orange at (1,1),
  // red at (2,1); every other cell is grey.
  const FeatureVector grey{1.0, 0.0, 0.0};
  const FeatureVector orange{0.0, 1.0, 0.0};
  const FeatureVector red{0.0, 0.0, 1.0};
  // tau_1: (0,0) (0,1) (0,2) (1,2) (2,2)
  Trajectory tau1({grey, grey, grey, grey, grey});
  // tau_2: (0,0) (1,0) (1,1) (1,2) (2,2)
  Trajectory tau2({grey, grey, orange, grey, grey});
  // tau_3: (0,0) (1,0) (2,0) (2,1) (2,2)
  Trajectory tau3({grey, grey, grey, red, grey});
  return GridScenario{
      PreferenceDataset({{tau1}, {tau2}, {tau3}}),
      NominalModel{{0.0, 0.0, 0.0}, 1.0},
      0.5,
      {0, 1, 1},
  };
}

}  // namespace prefcon
