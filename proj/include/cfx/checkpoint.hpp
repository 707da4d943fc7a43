// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cfx/forecaster.hpp"
#include "cfx/training.hpp"

namespace cfx {

struct Checkpoint {
  TgcnModel model;
  TrainingConfig config;
  std::vector<std::string> node_ids;
};

/// Single JSON document: config, seed, normalisation constants and every
/// tensor in row-major order. Doubles are written in shortest round-trip form.
std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cfx
