#include "prefcon/io.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

namespace prefcon {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

double ParseNumber(std::string_view token, std::size_t line_number) {
  token = Trim(token);
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw IoError("line " + std::to_string(line_number) +
                  ": cannot parse number '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

std::string FormatDouble(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) return "nan";
  return std::string(buffer, ptr);
}

void WriteFileAtomically(const std::filesystem::path& path,
                         std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory " +
                    path.parent_path().string() + ": " + ec.message());
    }
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() +
                  ": " + ec.message());
  }
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string SerializeTrajectory(const Trajectory& trajectory) {
  std::string out = "# prefcon trajectory v1\n";
  for (std::size_t t = 0; t < trajectory.length(); ++t) {
    const FeatureVector& step = trajectory.steps()[t];
    for (std::size_t f = 0; f < step.size(); ++f) {
      if (f > 0) out += ',';
      out += FormatDouble(step[f]);
    }
    if (trajectory.has_progress()) {
      out += ',';
      out += FormatDouble(trajectory.progress()[t]);
    }
    out += '\n';
  }
  return out;
}

Trajectory ParseTrajectory(std::string_view text, std::size_t num_features,
                           bool with_progress) {
  const std::size_t expected = num_features + (with_progress ? 1 : 0);
  std::vector<FeatureVector> steps;
  std::vector<double> progress;
  std::size_t line_number = 0;
  for (std::string_view line : SplitLines(text)) {
    ++line_number;
    line = Trim(line);
    if (line.empty() || line.front() == '#') continue;
    FeatureVector row;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string_view token = line.substr(
          start, comma == std::string_view::npos ? std::string_view::npos
                                                 : comma - start);
      row.push_back(ParseNumber(token, line_number));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (row.size() != expected) {
      throw IoError("line " + std::to_string(line_number) + ": expected " +
                    std::to_string(expected) + " columns, found " +
                    std::to_string(row.size()));
    }
    if (with_progress) {
      progress.push_back(row.back());
      row.pop_back();
    }
    steps.push_back(std::move(row));
  }
  try {
    return Trajectory(std::move(steps), std::move(progress));
  } catch (const InvalidInputError& e) {
    throw IoError(std::string("invalid trajectory: ") + e.what());
  }
}

std::string SerializeManifest(const Manifest& manifest) {
  std::string out = "# prefcon manifest v1\n";
  out += "features=" + std::to_string(manifest.num_features) + "\n";
  out += std::string("progress=") + (manifest.has_progress ? "1" : "0") + "\n";
  for (const ManifestEntry& entry : manifest.entries) {
    out += std::to_string(entry.group) + "," + entry.path + "\n";
  }
  return out;
}

Manifest ParseManifest(std::string_view text) {
  Manifest manifest;
  bool saw_features = false;
  bool saw_header = false;
  std::size_t line_number = 0;
  for (std::string_view line : SplitLines(text)) {
    ++line_number;
    line = Trim(line);
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != "# prefcon manifest v1") {
        throw IoError("manifest must start with '# prefcon manifest v1'");
      }
      saw_header = true;
      continue;
    }
    if (line.front() == '#') continue;
    const std::string where = "manifest line " + std::to_string(line_number);
    if (line.starts_with("features=")) {
      manifest.num_features =
          static_cast<std::size_t>(ParseNumber(line.substr(9), line_number));
      saw_features = true;
    } else if (line.starts_with("progress=")) {
      std::string_view flag = Trim(line.substr(9));
      if (flag != "0" && flag != "1") {
        throw IoError(where + ": progress must be 0 or 1");
      }
      manifest.has_progress = flag == "1";
    } else {
      std::size_t comma = line.find(',');
      if (comma == std::string_view::npos) {
        throw IoError(where + ": expected '<group>,<path>'");
      }
      double group = ParseNumber(line.substr(0, comma), line_number);
      if (group < 1 || group != static_cast<int>(group)) {
        throw IoError(where + ": group index must be a positive integer");
      }
      std::string_view path = Trim(line.substr(comma + 1));
      if (path.empty()) throw IoError(where + ": empty path");
      manifest.entries.push_back({static_cast<int>(group), std::string(path)});
    }
  }
  if (!saw_features || manifest.num_features == 0) {
    throw IoError("manifest lacks a positive features= line");
  }
  return manifest;
}

std::filesystem::path SaveDataset(const PreferenceDataset& dataset,
                                  const std::filesystem::path& directory) {
  Manifest manifest;
  manifest.num_features = dataset.num_features();
  manifest.has_progress = dataset.has_progress();
  for (std::size_t i = 0; i < dataset.num_trajectories(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "traj_%05zu.csv", i);
    WriteFileAtomically(directory / name,
                        SerializeTrajectory(dataset.trajectory(i)));
    manifest.entries.push_back(
        {static_cast<int>(dataset.group_of(i)) + 1, name});
  }
  std::filesystem::path manifest_path = directory / "manifest.txt";
  WriteFileAtomically(manifest_path, SerializeManifest(manifest));
  return manifest_path;
}

PreferenceDataset LoadDataset(const std::filesystem::path& manifest_path) {
  Manifest manifest = ParseManifest(ReadFile(manifest_path));
  std::map<int, std::vector<Trajectory>> by_group;
  const std::filesystem::path base = manifest_path.parent_path();
  for (const ManifestEntry& entry : manifest.entries) {
    std::filesystem::path path = base / entry.path;
    try {
      by_group[entry.group].push_back(ParseTrajectory(
          ReadFile(path), manifest.num_features, manifest.has_progress));
    } catch (const IoError& e) {
      throw IoError(path.string() + ": " + e.what());
    }
  }
  std::vector<std::vector<Trajectory>> groups;
  int expected = 1;
  for (auto& [group, trajectories] : by_group) {
    if (group != expected) {
      throw IoError("manifest has no trajectories for group " +
                    std::to_string(expected));
    }
    groups.push_back(std::move(trajectories));
    ++expected;
  }
  try {
    return PreferenceDataset(std::move(groups));
  } catch (const InvalidInputError& e) {
    throw IoError(std::string("invalid dataset: ") + e.what());
  }
}

}  // namespace prefcon
