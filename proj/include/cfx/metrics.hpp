// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>

#include "cfx/forecaster.hpp"

namespace cfx {

struct MetricsReport {
  double rmse = 0.0;      // km/h
  double mae = 0.0;       // km/h
  double accuracy = 0.0;  // 1 - ||y - yhat||_F / ||y||_F
  std::optional<double> r2;             // undefined for constant truth
  std::optional<double> var_explained;  // undefined for constant truth

  /// Fixed-key JSON object; undefined values are null.
  std::string to_json() const;
};

MetricsReport compute_metrics(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred);

/// Metrics over every horizon step and node of every window, in km/h.
MetricsReport evaluate_model(const TgcnModel& model, std::span<const FeatureWindow> windows);

}  // namespace cfx
