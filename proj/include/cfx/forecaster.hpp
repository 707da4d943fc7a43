// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cfx/graph.hpp"

namespace cfx {

struct NormalizedAdjacency {
  Eigen::MatrixXd matrix;  // D^-1/2 (A + I) D^-1/2
};

NormalizedAdjacency normalize_adjacency(const RoadGraph& graph);

enum class Activation { identity, relu };

struct GcnLayer {
  Eigen::MatrixXd weight;  // in_dim x out_dim
  Activation activation = Activation::relu;
};

/// activation(adj * features * weight). Throws DimensionError on shape mismatch.
Eigen::MatrixXd gcn_forward(const NormalizedAdjacency& adj, const Eigen::MatrixXd& features,
                            const GcnLayer& layer);

/// Gated recurrent unit. Gate weights act on the concatenation [gc, h] and
/// have shape (input_dim + hidden_dim) x hidden_dim.
struct GruCell {
  Eigen::MatrixXd weight_update;
  Eigen::MatrixXd weight_reset;
  Eigen::MatrixXd weight_candidate;
  Eigen::VectorXd bias_update;
  Eigen::VectorXd bias_reset;
  Eigen::VectorXd bias_candidate;

  std::size_t hidden_dim() const { return static_cast<std::size_t>(bias_update.size()); }
  std::size_t input_dim() const {
    return static_cast<std::size_t>(weight_update.rows()) - hidden_dim();
  }
};

/// One recurrent step. The update gate weights the previous state:
/// h = u * h_prev + (1 - u) * c.
Eigen::VectorXd gru_step(const GruCell& cell, const Eigen::VectorXd& gc_out,
                         const Eigen::VectorXd& h_prev);

struct Readout {
  Eigen::MatrixXd weight;  // hidden_dim x horizon_length
  Eigen::VectorXd bias;    // horizon_length
};

/// All trainable tensors. Also used to hold gradients.
struct ParameterBlock {
  GcnLayer gcn;
  GruCell gru;
  Readout readout;

  /// Visits every tensor as (name, flat storage, is_weight). Biases have
  /// is_weight = false and are excluded from L1 regularisation.
  template <typename F>
  void for_each(F&& fn) {
    fn("gcn.weight", span_of(gcn.weight), true);
    fn("gru.weight_update", span_of(gru.weight_update), true);
    fn("gru.weight_reset", span_of(gru.weight_reset), true);
    fn("gru.weight_candidate", span_of(gru.weight_candidate), true);
    fn("gru.bias_update", span_of(gru.bias_update), false);
    fn("gru.bias_reset", span_of(gru.bias_reset), false);
    fn("gru.bias_candidate", span_of(gru.bias_candidate), false);
    fn("readout.weight", span_of(readout.weight), true);
    fn("readout.bias", span_of(readout.bias), false);
  }
  template <typename F>
  void for_each(F&& fn) const {
    const_cast<ParameterBlock*>(this)->for_each(
        [&](std::string_view name, std::span<double> v, bool w) {
          fn(name, std::span<const double>(v.data(), v.size()), w);
        });
  }

  /// Same shapes, all zeros.
  ParameterBlock zeros_like() const;
  double l1_norm() const;

 private:
  template <typename M>
  static std::span<double> span_of(M& m) {
    return {m.data(), static_cast<std::size_t>(m.size())};
  }
};

struct TgcnModel {
  ParameterBlock params;
  NormalizedAdjacency adjacency;
  double speed_scale = 1.0;  // km/h corresponding to a normalised speed of 1
  std::size_t window_length = 12;
  std::size_t horizon_length = 12;
  std::vector<double> input_mask = std::vector<double>(feature::kDim, 1.0);

  std::size_t node_count() const { return static_cast<std::size_t>(adjacency.matrix.rows()); }
  std::size_t hidden_dim() const { return params.gru.hidden_dim(); }
};

struct ModelShape {
  std::size_t feature_dim = feature::kDim;
  std::size_t gcn_dim = 32;
  std::size_t hidden_dim = 32;
  std::size_t horizon_length = 12;
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
TgcnModel init_model(const RoadGraph& graph, const ModelShape& shape, double speed_scale,
                     std::uint64_t seed, std::size_t window_length = 12);

/// Predictions in km/h, horizon_length x node_count.
Eigen::MatrixXd model_forward(const TgcnModel& model, const FeatureWindow& window);

/// Normalised predictions, node_count x horizon_length.
Eigen::MatrixXd forward_normalized(const TgcnModel& model,
                                   std::span<const Eigen::MatrixXd> inputs);

/// Mean squared error plus l1_lambda * sum |w| over weights (biases excluded).
double loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth,
            const ParameterBlock& params, double l1_lambda);

struct LossAndGradients {
  double loss = 0.0;  // data term + regulariser
  double data_loss = 0.0;
  ParameterBlock gradients;
};

/// Exact reverse-mode gradients of `loss` with predictions and targets both
/// in normalised units (targets divided by the model's speed scale).
LossAndGradients backward(const TgcnModel& model, const FeatureWindow& window, double l1_lambda);

}  // namespace cfx
