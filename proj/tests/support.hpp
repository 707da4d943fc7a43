// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cfx/corpus.hpp"
#include "cfx/forecaster.hpp"
#include "cfx/run_dir.hpp"

namespace cfx::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  RunDirectory run() const { return {path_}; }

 private:
  std::filesystem::path path_;
};

/// 12 nodes, 4 days, lightly trained. Built once per process.
struct SmallWorld {
  Corpus corpus;
  TgcnModel model;
};
const SmallWorld& small_world();

/// Writes the small world's corpus and model into `run`.
void install_small_world(const RunDirectory& run);

std::filesystem::path golden(const std::string& name);

/// 5-node path graph with hidden size 8, random parameters (biases included)
/// and one random window.
struct GradientCase {
  TgcnModel model;
  FeatureWindow window;
};
GradientCase five_node_case(std::uint64_t seed);

struct GradientCheck {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst_absolute = 0.0;
  double worst_relative = 0.0;  // over entries outside the absolute tolerance
  std::string worst_entry;
};

/// Compares backward() against central differences of loss(). An entry
/// passes when the absolute error is within `abs_tol` or the relative error
/// is within `rel_tol`.
GradientCheck check_gradients(const TgcnModel& model, const FeatureWindow& window,
                              double l1_lambda, double step = 1e-5, double rel_tol = 1e-4,
                              double abs_tol = 1e-6);

}  // namespace cfx::testing
