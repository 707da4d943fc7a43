// SPDX-License-Identifier: Apache-2.0
#include "cfx/metrics.hpp"

#include <json.hpp>

#include <cmath>

#include "cfx/error.hpp"

namespace cfx {

MetricsReport compute_metrics(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred) {
  if (truth.rows() != pred.rows() || truth.cols() != pred.cols()) {
    throw DimensionError("truth and prediction shapes differ");
  }
  if (truth.size() == 0) throw DimensionError("empty metric input");
  const double n = static_cast<double>(truth.size());
  const Eigen::ArrayXXd residual = (truth - pred).array();

  MetricsReport r;
  r.rmse = std::sqrt(residual.square().sum() / n);
  r.mae = residual.abs().sum() / n;
  const double truth_norm = truth.norm();
  r.accuracy = 1.0 - std::sqrt(residual.square().sum()) / truth_norm;

  const double mean = truth.mean();
  const double total_ss = (truth.array() - mean).square().sum();
  if (total_ss > 0.0) {
    r.r2 = 1.0 - residual.square().sum() / total_ss;
    const double res_mean = residual.mean();
    const double res_var = (residual - res_mean).square().sum() / n;
    r.var_explained = 1.0 - res_var / (total_ss / n);
  }
  return r;
}

MetricsReport evaluate_model(const TgcnModel& model, std::span<const FeatureWindow> windows) {
  if (windows.empty()) throw DimensionError("no windows to evaluate");
  const Eigen::Index rows = windows.front().targets.rows();
  const Eigen::Index cols = windows.front().targets.cols();
  Eigen::MatrixXd truth(rows, cols * static_cast<Eigen::Index>(windows.size()));
  Eigen::MatrixXd pred(truth.rows(), truth.cols());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto offset = static_cast<Eigen::Index>(i) * cols;
    truth.middleCols(offset, cols) = windows[i].targets;
    pred.middleCols(offset, cols) = model_forward(model, windows[i]);
  }
  return compute_metrics(truth, pred);
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["rmse"] = rmse;
  j["mae"] = mae;
  j["accuracy"] = accuracy;
  j["r2"] = r2 ? nlohmann::ordered_json(*r2) : nlohmann::ordered_json(nullptr);
  j["var"] = var_explained ? nlohmann::ordered_json(*var_explained)
                           : nlohmann::ordered_json(nullptr);
  return j.dump(2);
}

}  // namespace cfx
