#include <doctest.h>

#include <filesystem>
#include <random>

#include "oracles.h"
#include "prefcon/io.h"

using namespace prefcon;
namespace fs = std::filesystem;

namespace {

fs::path ScratchDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("prefcon_io_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("doubles round trip through text") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> d(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = d(rng) / (1.0 + i);
    CHECK(std::stod(FormatDouble(v)) == v);
  }
  CHECK(FormatDouble(0.1) == "0.1");
}

TEST_CASE("trajectory text format") {
  const Trajectory t(std::vector<FeatureVector>{{1.0, 0.25}, {0.5, -3.0}}, {0.1, 0.2});
  const std::string text = SerializeTrajectory(t);
  const Trajectory back = ParseTrajectory(text, 2, true);
  CHECK(back.steps() == t.steps());
  CHECK(back.progress() == t.progress());
  CHECK_THROWS_AS(ParseTrajectory("1,2\n3\n", 2, false), IoError);
  CHECK_THROWS_AS(ParseTrajectory("1,abc\n", 2, false), IoError);
  CHECK_THROWS_AS(ParseTrajectory("# only a comment\n", 2, false), IoError);
}

TEST_CASE("dataset save and load") {
  std::mt19937_64 rng(52);
  const PreferenceDataset ds = oracle::RandomDataset(rng, 3, 9);
  const fs::path dir = ScratchDir("dataset");
  const fs::path manifest = SaveDataset(ds, dir);
  const PreferenceDataset back = LoadDataset(manifest);
  CHECK(back.num_groups() == ds.num_groups());
  REQUIRE(back.num_trajectories() == ds.num_trajectories());
  for (std::size_t i = 0; i < ds.num_trajectories(); ++i) {
    CHECK(back.group_of(i) == ds.group_of(i));
    CHECK(back.trajectory(i).steps() == ds.trajectory(i).steps());
    CHECK(back.trajectory(i).progress() == ds.trajectory(i).progress());
  }
  fs::remove_all(dir);
}

TEST_CASE("manifest errors") {
  CHECK_THROWS_AS(ParseManifest("features=2\nprogress=0\n1,a.csv\n"), IoError);
  CHECK_THROWS_AS(
      ParseManifest("# prefcon manifest v1\nfeatures=2\nprogress=0\n0,a.csv\n"),
      IoError);
  const Manifest m = ParseManifest(
      "# prefcon manifest v1\nfeatures=2\nprogress=1\n1,a.csv\n2,b.csv\n");
  CHECK(m.num_features == 2);
  CHECK(m.has_progress);
  CHECK(m.entries.size() == 2);
  CHECK(ParseManifest(SerializeManifest(m)).entries.size() == 2);
  CHECK_THROWS_AS(LoadDataset("/nonexistent/manifest.txt"), IoError);
}

TEST_CASE("atomic writes replace files whole") {
  const fs::path dir = ScratchDir("atomic");
  const fs::path file = dir / "nested" / "out.txt";
  WriteFileAtomically(file, "first");
  WriteFileAtomically(file, "second");
  CHECK(ReadFile(file) == "second");
  std::size_t entries = 0;
  for (const auto& e : fs::directory_iterator(file.parent_path())) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 1);
  fs::remove_all(dir);
}
