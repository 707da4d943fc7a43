// SPDX-License-Identifier: Apache-2.0
#include "cfx/forecaster.hpp"

#include <cmath>

#include "cfx/error.hpp"
#include "cfx/rng.hpp"

namespace cfx {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

NormalizedAdjacency normalize_adjacency(const RoadGraph& graph) {
  const Index n = static_cast<Index>(graph.node_count());
  MatrixXd a_tilde = graph.adjacency + MatrixXd::Identity(n, n);
  VectorXd inv_sqrt_deg = a_tilde.rowwise().sum().array().rsqrt();
  NormalizedAdjacency out;
  out.matrix = inv_sqrt_deg.asDiagonal() * a_tilde * inv_sqrt_deg.asDiagonal();
  return out;
}

namespace {

MatrixXd apply(Activation act, const MatrixXd& z) {
  return act == Activation::relu ? MatrixXd(z.cwiseMax(0.0)) : z;
}

MatrixXd sigmoid(const MatrixXd& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

struct StepCache {
  MatrixXd aggregated;  // adj * masked X
  MatrixXd pre_activation;
  MatrixXd gc;
  MatrixXd h_prev;
  MatrixXd update;
  MatrixXd reset;
  MatrixXd candidate;
};

struct ForwardTrace {
  std::vector<StepCache> steps;
  MatrixXd h_final;
  MatrixXd output;  // node_count x horizon, normalised
};

void check_window(const TgcnModel& model, std::span<const MatrixXd> inputs) {
  if (inputs.empty()) throw DimensionError("window has no input steps");
  const Index n = static_cast<Index>(model.node_count());
  const Index f = model.params.gcn.weight.rows();
  for (const auto& x : inputs) {
    if (x.rows() != n || x.cols() != f) {
      throw DimensionError("window step is " + std::to_string(x.rows()) + "x" +
                           std::to_string(x.cols()) + ", model expects " + std::to_string(n) +
                           "x" + std::to_string(f));
    }
  }
}

ForwardTrace run_forward(const TgcnModel& model, std::span<const MatrixXd> inputs,
                         bool keep_cache) {
  check_window(model, inputs);
  const auto& p = model.params;
  const Index n = static_cast<Index>(model.node_count());
  const Index g = p.gcn.weight.cols();
  const Index h = static_cast<Index>(p.gru.hidden_dim());
  const Eigen::Map<const Eigen::RowVectorXd> mask(model.input_mask.data(),
                                                  static_cast<Index>(model.input_mask.size()));

  ForwardTrace trace;
  if (keep_cache) trace.steps.reserve(inputs.size());
  MatrixXd state = MatrixXd::Zero(n, h);
  for (const auto& x : inputs) {
    StepCache c;
    c.aggregated = model.adjacency.matrix * (x.array().rowwise() * mask.array()).matrix();
    c.pre_activation = c.aggregated * p.gcn.weight;
    c.gc = apply(p.gcn.activation, c.pre_activation);
    const auto& gru = p.gru;
    MatrixXd u_pre = c.gc * gru.weight_update.topRows(g) + state * gru.weight_update.bottomRows(h);
    u_pre.rowwise() += gru.bias_update.transpose();
    MatrixXd r_pre = c.gc * gru.weight_reset.topRows(g) + state * gru.weight_reset.bottomRows(h);
    r_pre.rowwise() += gru.bias_reset.transpose();
    c.update = sigmoid(u_pre);
    c.reset = sigmoid(r_pre);
    MatrixXd c_pre = c.gc * gru.weight_candidate.topRows(g) +
                     c.reset.cwiseProduct(state) * gru.weight_candidate.bottomRows(h);
    c_pre.rowwise() += gru.bias_candidate.transpose();
    c.candidate = c_pre.array().tanh().matrix();
    MatrixXd next = c.update.cwiseProduct(state) +
                    (1.0 - c.update.array()).matrix().cwiseProduct(c.candidate);
    if (keep_cache) {
      c.h_prev = std::move(state);
      trace.steps.push_back(std::move(c));
    }
    state = std::move(next);
  }
  trace.output = state * p.readout.weight;
  trace.output.rowwise() += p.readout.bias.transpose();
  trace.h_final = std::move(state);
  return trace;
}

}  // namespace

MatrixXd gcn_forward(const NormalizedAdjacency& adj, const MatrixXd& features,
                     const GcnLayer& layer) {
  if (adj.matrix.cols() != features.rows()) {
    throw DimensionError("adjacency and feature row counts differ");
  }
  if (features.cols() != layer.weight.rows()) {
    throw DimensionError("feature width does not match layer input dimension");
  }
  return apply(layer.activation, adj.matrix * features * layer.weight);
}

VectorXd gru_step(const GruCell& cell, const VectorXd& gc_out, const VectorXd& h_prev) {
  const Index h = static_cast<Index>(cell.hidden_dim());
  const Index g = static_cast<Index>(cell.input_dim());
  if (h_prev.size() != h || gc_out.size() != g) {
    throw DimensionError("gru_step input dimensions do not match the cell");
  }
  VectorXd cat(g + h);
  cat << gc_out, h_prev;
  const VectorXd u = sigmoid(cell.weight_update.transpose() * cat + cell.bias_update);
  const VectorXd r = sigmoid(cell.weight_reset.transpose() * cat + cell.bias_reset);
  VectorXd cand_in(g + h);
  cand_in << gc_out, r.cwiseProduct(h_prev);
  const VectorXd c =
      (cell.weight_candidate.transpose() * cand_in + cell.bias_candidate).array().tanh().matrix();
  return u.cwiseProduct(h_prev) + (1.0 - u.array()).matrix().cwiseProduct(c);
}

ParameterBlock ParameterBlock::zeros_like() const {
  ParameterBlock z = *this;
  z.for_each([](std::string_view, std::span<double> v, bool) {
    std::fill(v.begin(), v.end(), 0.0);
  });
  return z;
}

double ParameterBlock::l1_norm() const {
  double total = 0.0;
  for_each([&](std::string_view, std::span<const double> v, bool is_weight) {
    if (!is_weight) return;
    for (double x : v) total += std::abs(x);
  });
  return total;
}

TgcnModel init_model(const RoadGraph& graph, const ModelShape& shape, double speed_scale,
                     std::uint64_t seed, std::size_t window_length) {
  Rng rng(seed);
  auto uniform = [&](Index rows, Index cols, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    MatrixXd m(rows, cols);
    // Row-major fill order so the draw sequence is independent of storage order.
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
    }
    return m;
  };
  const Index f = static_cast<Index>(shape.feature_dim);
  const Index g = static_cast<Index>(shape.gcn_dim);
  const Index h = static_cast<Index>(shape.hidden_dim);
  const Index k = static_cast<Index>(shape.horizon_length);

  TgcnModel model;
  model.adjacency = normalize_adjacency(graph);
  model.speed_scale = speed_scale;
  model.window_length = window_length;
  model.horizon_length = shape.horizon_length;
  model.input_mask.assign(shape.feature_dim, 1.0);
  auto& p = model.params;
  p.gcn.weight = uniform(f, g, shape.feature_dim);
  p.gcn.activation = Activation::relu;
  p.gru.weight_update = uniform(g + h, h, shape.gcn_dim + shape.hidden_dim);
  p.gru.weight_reset = uniform(g + h, h, shape.gcn_dim + shape.hidden_dim);
  p.gru.weight_candidate = uniform(g + h, h, shape.gcn_dim + shape.hidden_dim);
  p.gru.bias_update = VectorXd::Zero(h);
  p.gru.bias_reset = VectorXd::Zero(h);
  p.gru.bias_candidate = VectorXd::Zero(h);
  p.readout.weight = uniform(h, k, shape.hidden_dim);
  p.readout.bias = VectorXd::Zero(k);
  return model;
}

MatrixXd forward_normalized(const TgcnModel& model, std::span<const MatrixXd> inputs) {
  return run_forward(model, inputs, false).output;
}

MatrixXd model_forward(const TgcnModel& model, const FeatureWindow& window) {
  if (window.node_count() != model.node_count() && window.targets.size() != 0) {
    throw DimensionError("window node count does not match the model");
  }
  return (forward_normalized(model, window.inputs) * model.speed_scale).transpose();
}

double loss(const MatrixXd& pred, const MatrixXd& truth, const ParameterBlock& params,
            double l1_lambda) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw DimensionError("prediction and truth shapes differ");
  }
  const double mse = (truth - pred).squaredNorm() / static_cast<double>(truth.size());
  return mse + (l1_lambda != 0.0 ? l1_lambda * params.l1_norm() : 0.0);
}

LossAndGradients backward(const TgcnModel& model, const FeatureWindow& window,
                          double l1_lambda) {
  const auto trace = run_forward(model, window.inputs, true);
  const auto& p = model.params;
  const Index g = p.gcn.weight.cols();
  const Index h = static_cast<Index>(p.gru.hidden_dim());
  const MatrixXd truth = window.targets.transpose() / model.speed_scale;  // node x horizon
  if (truth.rows() != trace.output.rows() || truth.cols() != trace.output.cols()) {
    throw DimensionError("window targets do not match the model horizon");
  }

  LossAndGradients out;
  out.gradients = p.zeros_like();
  auto& grad = out.gradients;
  const MatrixXd residual = trace.output - truth;
  out.data_loss = residual.squaredNorm() / static_cast<double>(residual.size());
  out.loss = out.data_loss + (l1_lambda != 0.0 ? l1_lambda * p.l1_norm() : 0.0);

  const MatrixXd d_out = residual * (2.0 / static_cast<double>(residual.size()));
  grad.readout.weight = trace.h_final.transpose() * d_out;
  grad.readout.bias = d_out.colwise().sum().transpose();
  MatrixXd d_h = d_out * p.readout.weight.transpose();

  for (auto it = trace.steps.rbegin(); it != trace.steps.rend(); ++it) {
    const StepCache& c = *it;
    const auto one_minus_u = (1.0 - c.update.array());
    MatrixXd d_u = d_h.cwiseProduct(c.h_prev - c.candidate);
    MatrixXd d_cand = d_h.cwiseProduct(one_minus_u.matrix());
    MatrixXd d_hprev = d_h.cwiseProduct(c.update);

    // Candidate: tanh([gc, r*h] Wc + bc)
    const MatrixXd d_cpre =
        d_cand.cwiseProduct((1.0 - c.candidate.array().square()).matrix());
    const MatrixXd rh = c.reset.cwiseProduct(c.h_prev);
    grad.gru.weight_candidate.topRows(g) += c.gc.transpose() * d_cpre;
    grad.gru.weight_candidate.bottomRows(h) += rh.transpose() * d_cpre;
    grad.gru.bias_candidate += d_cpre.colwise().sum().transpose();
    MatrixXd d_gc = d_cpre * p.gru.weight_candidate.topRows(g).transpose();
    const MatrixXd d_rh = d_cpre * p.gru.weight_candidate.bottomRows(h).transpose();
    const MatrixXd d_r = d_rh.cwiseProduct(c.h_prev);
    d_hprev += d_rh.cwiseProduct(c.reset);

    // Gates: sigmoid([gc, h] W + b)
    const MatrixXd d_upre = d_u.cwiseProduct(c.update.cwiseProduct(one_minus_u.matrix()));
    const MatrixXd d_rpre =
        d_r.cwiseProduct(c.reset.cwiseProduct((1.0 - c.reset.array()).matrix()));
    grad.gru.weight_update.topRows(g) += c.gc.transpose() * d_upre;
    grad.gru.weight_update.bottomRows(h) += c.h_prev.transpose() * d_upre;
    grad.gru.bias_update += d_upre.colwise().sum().transpose();
    grad.gru.weight_reset.topRows(g) += c.gc.transpose() * d_rpre;
    grad.gru.weight_reset.bottomRows(h) += c.h_prev.transpose() * d_rpre;
    grad.gru.bias_reset += d_rpre.colwise().sum().transpose();
    d_gc += d_upre * p.gru.weight_update.topRows(g).transpose() +
            d_rpre * p.gru.weight_reset.topRows(g).transpose();
    d_hprev += d_upre * p.gru.weight_update.bottomRows(h).transpose() +
               d_rpre * p.gru.weight_reset.bottomRows(h).transpose();

    // Graph convolution
    MatrixXd d_pre = d_gc;
    if (p.gcn.activation == Activation::relu) {
      d_pre = (c.pre_activation.array() > 0.0).select(d_gc, 0.0);
    }
    grad.gcn.weight += c.aggregated.transpose() * d_pre;
    d_h = std::move(d_hprev);
  }

  if (l1_lambda != 0.0) {
    std::vector<std::span<double>> grads;
    grad.for_each([&](std::string_view, std::span<double> v, bool) { grads.push_back(v); });
    std::size_t idx = 0;
    p.for_each([&](std::string_view, std::span<const double> w, bool is_weight) {
      auto gv = grads[idx++];
      if (!is_weight) return;
      for (std::size_t i = 0; i < w.size(); ++i) {
        gv[i] += l1_lambda * static_cast<double>((w[i] > 0.0) - (w[i] < 0.0));
      }
    });
  }
  return out;
}

}  // namespace cfx
