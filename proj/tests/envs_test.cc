#include <doctest.h>

#include <algorithm>
#include <random>

#include "prefcon/envs.h"
#include "prefcon/io.h"

using namespace prefcon;

TEST_CASE("navigation features") {
  const NavigationWorld world = NavigationWorld::PointMass();
  CHECK_NOTHROW(world.Validate());
  const std::vector<double> at_goal = world.goal_center;
  CHECK(NavigationFeatures(at_goal, world)[3] == 0.0);
  CHECK(NavigationFeatures(at_goal, world)[0] == world.inverse_distance_cap);

  std::vector<double> in_red(2);
  for (int d = 0; d < 2; ++d) {
    in_red[d] = 0.5 * (world.red.lower[d] + world.red.upper[d]);
  }
  const FeatureVector red = NavigationFeatures(in_red, world);
  CHECK(red[2] == 1.0);
  CHECK(red[1] == 0.0);

  const std::vector<double> far{world.goal_center[0] + 2.0, world.goal_center[1]};
  CHECK(NavigationFeatures(far, world) == FeatureVector{0.5, 0.0, 0.0, 1.0});
}

TEST_CASE("world definitions") {
  const NavigationWorld pm = NavigationWorld::PointMass();
  CHECK(pm.true_weights == std::vector<double>{1, -10, -100, -1});
  CHECK(pm.nominal_weights == std::vector<double>{1, 0, 0, -1});
  CHECK(pm.true_mask() == std::vector<int>{0, 1, 1, 0});
  CHECK(pm.max_steps == 500);
  const NavigationWorld reach = NavigationWorld::Reach();
  CHECK_NOTHROW(reach.Validate());
  CHECK(reach.dim() == 3);
  CHECK(reach.true_weights == std::vector<double>{0.1, -20, -100, -5});
  CHECK(reach.nominal_weights == std::vector<double>{0.1, 0, 0, -5});
  CHECK(reach.true_mask() == std::vector<int>{0, 1, 1, 0});

  const LocomotionWorld hc = LocomotionWorld::HalfCheetahAnalog();
  CHECK(hc.theta_star == 8.0);
  CHECK(hc.penalty == -50.0);
  CHECK(hc.nominal_weights == std::vector<double>{20.0, -0.1});
  CHECK(hc.episode_length == 500);
  const LocomotionWorld ant = LocomotionWorld::AntAnalog();
  CHECK(ant.theta_star == 10.0);
  CHECK(ant.penalty == -100.0);

  NavigationWorld broken = pm;
  broken.red.lower = {0.80, 0.80};
  broken.red.upper = {0.90, 0.90};
  CHECK_THROWS_AS(broken.Validate(), InvalidInputError);
}

TEST_CASE("navigation demos respect their quality class") {
  for (const NavigationWorld& world :
       {NavigationWorld::PointMass(), NavigationWorld::Reach()}) {
    std::mt19937_64 rng(41);
    for (int i = 0; i < 30; ++i) {
      for (DemoQuality q :
           {DemoQuality::kGood, DemoQuality::kBad, DemoQuality::kVeryBad}) {
        const Trajectory t = GenerateDemo(world, q, rng);
        CHECK(t.length() <= static_cast<std::size_t>(world.max_steps));
        double orange = 0.0;
        double red = 0.0;
        for (const FeatureVector& phi : t.steps()) {
          orange += phi[1];
          red += phi[2];
          CHECK((phi[1] == 0.0 || phi[1] == 1.0));
          CHECK((phi[3] == 0.0 || phi[3] == 1.0));
        }
        CHECK(t.steps().back()[3] == 0.0);
        switch (q) {
          case DemoQuality::kGood:
            CHECK(orange == 0.0);
            CHECK(red == 0.0);
            break;
          case DemoQuality::kBad:
            CHECK(orange > 0.0);
            CHECK(red == 0.0);
            break;
          case DemoQuality::kVeryBad:
            CHECK(red > 0.0);
            break;
        }
      }
    }
  }
}

TEST_CASE("locomotion demos respect their quality class") {
  for (const LocomotionWorld& world :
       {LocomotionWorld::HalfCheetahAnalog(), LocomotionWorld::AntAnalog()}) {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 50; ++i) {
      const Trajectory good = GenerateDemo(world, DemoQuality::kGood, rng);
      const Trajectory bad = GenerateDemo(world, DemoQuality::kBad, rng);
      CHECK(good.length() == 500);
      CHECK(bad.length() == 500);
      const auto& gp = good.progress();
      const auto& bp = bad.progress();
      CHECK(*std::max_element(gp.begin(), gp.end()) <
            world.theta_star - world.gap);
      CHECK(*std::max_element(bp.begin(), bp.end()) > world.theta_star);
    }
    CHECK_THROWS_AS(GenerateDemo(world, DemoQuality::kVeryBad, rng),
                    InvalidInputError);
  }
}

TEST_CASE("datasets are grouped, ordered and deterministic") {
  const NavigationWorld world = NavigationWorld::PointMass();
  const std::size_t counts[] = {12, 12, 12};
  const PreferenceDataset a = BuildDataset(world, counts, 7);
  const PreferenceDataset b = BuildDataset(world, counts, 7);
  CHECK(a.num_groups() == 3);
  CHECK(a.num_trajectories() == 36);
  for (std::size_t i = 0; i < a.num_trajectories(); ++i) {
    CHECK(SerializeTrajectory(a.trajectory(i)) ==
          SerializeTrajectory(b.trajectory(i)));
  }
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const PreferenceDataset ds = BuildDataset(world, counts, seed);
    std::vector<double> means(3, 0.0);
    for (std::size_t i = 0; i < ds.num_trajectories(); ++i) {
      means[ds.group_of(i)] += NavigationTrueReward(ds.trajectory(i), world);
    }
    CHECK(means[0] > means[1]);
    CHECK(means[1] > means[2]);
  }

  const std::size_t uneven[] = {20, 60, 100};
  CHECK(BuildDataset(world, uneven, 1).num_trajectories() == 180);
  const std::size_t empty[] = {3, 0, 3};
  CHECK_THROWS_AS(BuildDataset(world, empty, 1), InvalidInputError);

  const std::size_t loco[] = {10, 10};
  const PreferenceDataset l =
      BuildDataset(LocomotionWorld::HalfCheetahAnalog(), loco, 3);
  CHECK(l.num_groups() == 2);
  CHECK(l.has_progress());
}

TEST_CASE("grid scenario") {
  const GridScenario grid = Grid3x3Scenario();
  CHECK(grid.dataset.num_groups() == 3);
  CHECK(grid.dataset.num_pairs() == 3);
  CHECK(grid.dataset.mean_features(0) == FeatureVector{1.0, 0.0, 0.0});
  CHECK(grid.dataset.mean_features(1)[1] > 0.0);
  CHECK(grid.dataset.mean_features(2)[2] > 0.0);
  CHECK(grid.target_gap_ratio == 0.5);
}
