// SPDX-License-Identifier: Apache-2.0
#include "cfx/training.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "cfx/error.hpp"
#include "cfx/rng.hpp"

namespace cfx {

void TrainingConfig::validate() const {
  if (epochs == 0) throw ConfigError("$.epochs", "must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("$.learning_rate", "must be a finite non-negative number");
  }
  if (!(l1_lambda >= 0.0)) throw ConfigError("$.l1_lambda", "must be non-negative");
  if (hidden_dim == 0) throw ConfigError("$.hidden_dim", "must be positive");
  if (batch_size == 0) throw ConfigError("$.batch_size", "must be positive");
}

namespace {

void accumulate(ParameterBlock& into, const ParameterBlock& add, double scale) {
  std::vector<std::span<const double>> src;
  add.for_each([&](std::string_view, std::span<const double> v, bool) { src.push_back(v); });
  std::size_t idx = 0;
  into.for_each([&](std::string_view, std::span<double> v, bool) {
    const auto s = src[idx++];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += scale * s[i];
  });
}

double held_out_mse(const TgcnModel& model, std::span<const FeatureWindow> windows) {
  if (windows.empty()) return 0.0;
  double total = 0.0;
  for (const auto& w : windows) {
    const Eigen::MatrixXd pred = forward_normalized(model, w.inputs);
    const Eigen::MatrixXd truth = w.targets.transpose() / model.speed_scale;
    total += (pred - truth).squaredNorm() / static_cast<double>(truth.size());
  }
  return total / static_cast<double>(windows.size());
}

}  // namespace

TrainResult train(TgcnModel model, std::span<const FeatureWindow> train_windows,
                  std::span<const FeatureWindow> test_windows, const TrainingConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_windows.empty()) throw ConfigError("$.train_windows", "training set is empty");
  model.input_mask = input_mask(config.features);

  Rng rng(config.seed);
  std::vector<std::size_t> order(train_windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double inv = 1.0 / static_cast<double>(end - begin);
      ParameterBlock batch_grad = model.params.zeros_like();
      double batch_loss = 0.0;
      // Summation follows the shuffled order, so the trajectory is reproducible.
      for (std::size_t i = begin; i < end; ++i) {
        auto lg = backward(model, train_windows[order[i]], config.l1_lambda);
        batch_loss += lg.loss * inv;
        accumulate(batch_grad, lg.gradients, inv);
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                               std::to_string(batches + 1) +
                               "; lower the learning rate or l1_lambda");
      }
      accumulate(model.params, batch_grad, -config.learning_rate);
      epoch_loss += batch_loss;
      ++batches;
    }
    EpochStats stats{epoch, epoch_loss / static_cast<double>(batches),
                     held_out_mse(model, test_windows)};
    if (!std::isfinite(stats.test_loss)) {
      throw TrainingDiverged("non-finite held-out loss at epoch " + std::to_string(epoch));
    }
    result.trace.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace cfx
