// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unistd.h>

#include "cfx/checkpoint.hpp"
#include "cfx/pipeline.hpp"
#include "cfx/rng.hpp"

namespace cfx::testing {

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("cfx-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

namespace {

TrainOptions small_options() {
  TrainOptions o;
  o.config.epochs = 4;
  o.config.hidden_dim = 8;
  o.config.seed = 5;
  o.test_days = 1;
  o.train_stride = 6;
  return o;
}

}  // namespace

const SmallWorld& small_world() {
  static const SmallWorld world = [] {
    SyntheticCorpusSpec spec;
    spec.node_count = 12;
    spec.days = 4;
    spec.seed = 3;
    SmallWorld w;
    w.corpus = synth_generate(spec);
    w.model = train_corpus(w.corpus, small_options()).model;
    return w;
  }();
  return world;
}

void install_small_world(const RunDirectory& run) {
  const SmallWorld& w = small_world();
  save_corpus(w.corpus, run.corpus());
  Checkpoint ckpt{w.model, small_options().config, w.corpus.graph.node_ids};
  save_checkpoint(ckpt, run.model());
}

std::filesystem::path golden(const std::string& name) {
  return std::filesystem::path(CFX_GOLDEN_DIR) / name;
}

GradientCase five_node_case(std::uint64_t seed) {
  const RoadGraph graph =
      RoadGraph::from_edges({"a", "b", "c", "d", "e"}, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  ModelShape shape;
  shape.gcn_dim = 8;
  shape.hidden_dim = 8;
  GradientCase c;
  c.model = init_model(graph, shape, 100.0, seed);
  Rng rng(seed + 1000);
  c.model.params.for_each([&](std::string_view, std::span<double> v, bool is_weight) {
    if (!is_weight) {
      for (double& x : v) x = rng.uniform(-0.5, 0.5);
    }
  });
  for (std::size_t k = 0; k < c.model.window_length; ++k) {
    Eigen::MatrixXd x(5, static_cast<Eigen::Index>(feature::kDim));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.uniform(0.0, 1.0);
    }
    c.window.inputs.push_back(x);
  }
  c.window.targets.resize(static_cast<Eigen::Index>(c.model.horizon_length), 5);
  for (Eigen::Index i = 0; i < c.window.targets.size(); ++i) {
    c.window.targets.data()[i] = rng.uniform(20.0, 90.0);
  }
  return c;
}

GradientCheck check_gradients(const TgcnModel& model, const FeatureWindow& window,
                              double l1_lambda, double step, double rel_tol, double abs_tol) {
  const LossAndGradients analytic = backward(model, window, l1_lambda);
  const Eigen::MatrixXd truth = window.targets.transpose() / model.speed_scale;
  std::vector<std::pair<std::string, std::vector<double>>> grads;
  analytic.gradients.for_each([&](std::string_view name, std::span<const double> g, bool) {
    grads.emplace_back(std::string(name), std::vector<double>(g.begin(), g.end()));
  });

  GradientCheck out;
  TgcnModel probe = model;
  std::size_t tensor = 0;
  probe.params.for_each([&](std::string_view name, std::span<double> v, bool) {
    const auto& g = grads[tensor++].second;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double saved = v[i];
      v[i] = saved + step;
      const double up = loss(forward_normalized(probe, window.inputs), truth, probe.params, l1_lambda);
      v[i] = saved - step;
      const double down = loss(forward_normalized(probe, window.inputs), truth, probe.params, l1_lambda);
      v[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = std::abs(numeric - g[i]);
      const double scale = std::max(std::abs(numeric), std::abs(g[i]));
      const double rel = scale > 0.0 ? err / scale : 0.0;
      ++out.checked;
      out.worst_absolute = std::max(out.worst_absolute, err);
      if (err <= abs_tol) continue;
      if (rel > rel_tol) ++out.failures;
      if (rel > out.worst_relative) {
        out.worst_relative = rel;
        out.worst_entry = std::string(name) + "[" + std::to_string(i) + "]";
      }
    }
  });
  return out;
}

}  // namespace cfx::testing
