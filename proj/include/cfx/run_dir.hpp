// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

namespace cfx {

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

/// File layout of a run directory.
struct RunDirectory {
  std::filesystem::path root;

  std::filesystem::path corpus() const { return root / "corpus"; }
  std::filesystem::path model() const { return root / "model.json"; }
  std::filesystem::path metrics() const { return root / "metrics.json"; }
  std::filesystem::path search() const { return root / "search.json"; }
  std::filesystem::path history() const { return root / "history.ndjson"; }
  std::filesystem::path front_csv() const { return root / "front.csv"; }
  std::filesystem::path front_json() const { return root / "front.json"; }
  std::filesystem::path impact() const { return root / "impact.json"; }
  std::filesystem::path diff() const { return root / "diff.csv"; }
  std::filesystem::path meta() const { return root / "meta.json"; }
  std::filesystem::path jobs() const { return root / "jobs"; }
};

}  // namespace cfx
