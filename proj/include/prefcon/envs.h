// Synthetic environments and scripted demonstration generators.
//
// Navigation worlds (2D point mass, 3D reach) expose four features per state:
//   1. inverse distance to the goal centre, capped
//   2. orange-region indicator
//   3. red-region indicator
//   4. not-at-goal indicator
// Demonstrations come from a noisy waypoint controller: good routes avoid both
// regions, bad routes cross orange, very bad routes cross red.
//
// The locomotion world stands in for the running tasks: nominal features are
// the per-step forward progress and the squared action norm, and each step
// carries its progress coordinate z for the halfspace constraint 1[z >= theta].

#ifndef PREFCON_ENVS_H_
#define PREFCON_ENVS_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "prefcon/model.h"

namespace prefcon {

enum class DemoQuality { kGood = 0, kBad = 1, kVeryBad = 2 };
const char* DemoQualityName(DemoQuality quality);

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  bool Contains(std::span<const double> point) const;
};

struct NavigationWorld {
  std::string name;
  std::vector<double> goal_center;
  double goal_radius = 0.06;
  Box orange;
  Box red;
  std::vector<double> true_weights;     // w_n + w_p
  std::vector<double> nominal_weights;  // w_n
  int max_steps = 500;
  double inverse_distance_cap = 10.0;

  // Controller.
  std::vector<double> start_center;
  double start_jitter = 0.04;
  double step_size = 0.01;
  double step_noise = 0.003;
  double waypoint_jitter = 0.015;
  double waypoint_radius = 0.02;
  // One intermediate waypoint per quality, indexed by DemoQuality.
  std::vector<std::vector<double>> waypoints;

  std::size_t dim() const { return goal_center.size(); }
  std::vector<double> penalty_weights() const;  // true - nominal
  std::vector<int> true_mask() const;

  static NavigationWorld PointMass();
  static NavigationWorld Reach();
  // Throws InvalidInputError on inconsistent geometry.
  void Validate() const;
};

struct LocomotionWorld {
  std::string name;
  double theta_star = 8.0;
  double penalty = -50.0;
  std::vector<double> nominal_weights{20.0, -0.1};
  int episode_length = 500;
  // Good demos stop below theta_star - gap.
  double gap = 0.5;
  // Good stopping points are drawn from [theta_star - gap - spread,
  // theta_star - gap).
  double good_spread = 2.0;
  // Bad demos end in [theta_star + bad_overshoot_min, + bad_overshoot_max].
  double bad_overshoot_min = 1.0;
  double bad_overshoot_max = 5.0;
  double progress_noise = 0.02;
  int action_dim = 6;
  double action_noise = 0.3;

  static LocomotionWorld HalfCheetahAnalog();
  static LocomotionWorld AntAnalog();
  void Validate() const;
};

// Feature vector at `position`.
FeatureVector NavigationFeatures(std::span<const double> position,
                                 const NavigationWorld& world);

// True-reward mean of a trajectory, (w_n + w_p)^T mean_phi.
double NavigationTrueReward(const Trajectory& trajectory,
                            const NavigationWorld& world);
double LocomotionTrueReward(const Trajectory& trajectory,
                            const LocomotionWorld& world);

// Generators retry internally until the quality guarantee holds.
Trajectory GenerateDemo(const NavigationWorld& world, DemoQuality quality,
                        std::mt19937_64& rng);
Trajectory GenerateDemo(const LocomotionWorld& world, DemoQuality quality,
                        std::mt19937_64& rng);

// counts[g] demos for group g in order good, bad, very bad (navigation: three
// groups; locomotion: good and bad). Deterministic in `seed`.
PreferenceDataset BuildDataset(const NavigationWorld& world,
                               std::span<const std::size_t> counts,
                               std::uint64_t seed);
PreferenceDataset BuildDataset(const LocomotionWorld& world,
                               std::span<const std::size_t> counts,
                               std::uint64_t seed);

// Three singleton groups on a 3x3 grid with one-hot (grey, orange, red)
// features: tau_1 only grey, tau_2 through one orange cell, tau_3 through
// one red cell. The demonstrator states that gap(tau_1, tau_2) is about
// twice gap(tau_2, tau_3).
struct GridScenario {
  PreferenceDataset dataset;
  NominalModel nominal;
  // Target for gap(G_2, G_3) / gap(G_1, G_2).
  double target_gap_ratio = 0.5;
  std::vector<int> true_mask;
};
GridScenario Grid3x3Scenario();

}  // namespace prefcon

#endif  // PREFCON_ENVS_H_
