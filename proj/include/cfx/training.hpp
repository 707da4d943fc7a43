// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cfx/forecaster.hpp"

namespace cfx {

struct TrainingConfig {
  std::size_t epochs = 80;
  double learning_rate = 2.0;
  double l1_lambda = 1e-6;
  std::size_t hidden_dim = 32;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;
  std::vector<FeatureGroup> features = all_feature_groups();

  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean batch objective during the epoch
  double test_loss = 0.0;   // mean squared error on held-out windows, normalised units
};

struct TrainResult {
  TgcnModel model;
  std::vector<EpochStats> trace;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch gradient descent with a fixed learning rate. Deterministic for a
/// given seed. Throws TrainingDiverged on a non-finite loss.
TrainResult train(TgcnModel model, std::span<const FeatureWindow> train_windows,
                  std::span<const FeatureWindow> test_windows, const TrainingConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace cfx
