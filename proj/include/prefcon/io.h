// Text formats for trajectories and dataset manifests, plus small file helpers.
//
// Trajectory file: one step per line, comma-separated feature values, with an
// optional trailing progress column. Lines starting with '#' are comments.
//
// Manifest file:
//   # prefcon manifest v1
//   features=<N>
//   progress=<0|1>
//   <group>,<path>        one line per trajectory, group is 1-based
// Paths are relative to the manifest's directory.

#ifndef PREFCON_IO_H_
#define PREFCON_IO_H_

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "prefcon/model.h"

namespace prefcon {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest round-trip decimal representation.
std::string FormatDouble(double value);

// Writes `contents` to a temporary sibling and renames it over `path`.
void WriteFileAtomically(const std::filesystem::path& path,
                         std::string_view contents);
std::string ReadFile(const std::filesystem::path& path);

std::string SerializeTrajectory(const Trajectory& trajectory);
// `num_features` is the expected feature count; a line with one extra column
// is read as carrying progress only when `with_progress` is set.
Trajectory ParseTrajectory(std::string_view text, std::size_t num_features,
                           bool with_progress);

struct ManifestEntry {
  int group = 0;  // 1-based
  std::string path;
};

struct Manifest {
  std::size_t num_features = 0;
  bool has_progress = false;
  std::vector<ManifestEntry> entries;
};

std::string SerializeManifest(const Manifest& manifest);
Manifest ParseManifest(std::string_view text);

// Writes one file per trajectory under `directory` plus `manifest.txt`.
// Returns the manifest path.
std::filesystem::path SaveDataset(const PreferenceDataset& dataset,
                                  const std::filesystem::path& directory);
PreferenceDataset LoadDataset(const std::filesystem::path& manifest_path);

}  // namespace prefcon

#endif  // PREFCON_IO_H_
