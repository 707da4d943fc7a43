// SPDX-License-Identifier: Apache-2.0
#include "cfx/checkpoint.hpp"

#include <json.hpp>

#include "cfx/error.hpp"
#include "cfx/run_dir.hpp"

namespace cfx {

using nlohmann::json;

namespace {

json tensor_to_json(std::span<const double> values, Eigen::Index rows, Eigen::Index cols) {
  json data = json::array();
  // Eigen stores column-major; emit row-major.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      data.push_back(values[static_cast<std::size_t>(j * rows + i)]);
    }
  }
  return {{"rows", rows}, {"cols", cols}, {"data", std::move(data)}};
}

template <typename M>
void tensor_from_json(const json& j, M& m, const std::string& name) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw InvalidInput("tensor '" + name + "' has the wrong element count");
  }
  if constexpr (M::ColsAtCompileTime == 1) {
    if (cols != 1) throw InvalidInput("tensor '" + name + "' must be a column vector");
    m.resize(rows);
  } else {
    m.resize(rows, cols);
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      m(i, k) = data[static_cast<std::size_t>(i * cols + k)].get<double>();
    }
  }
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  const auto& m = ckpt.model;
  const auto& p = m.params;
  json features = json::array();
  for (auto g : ckpt.config.features) features.push_back(to_string(g));
  json config = {{"epochs", ckpt.config.epochs},
                 {"learning_rate", ckpt.config.learning_rate},
                 {"l1_lambda", ckpt.config.l1_lambda},
                 {"hidden_dim", ckpt.config.hidden_dim},
                 {"batch_size", ckpt.config.batch_size},
                 {"seed", ckpt.config.seed},
                 {"features", features}};
  json tensors = json::object();
  auto put = [&](const char* name, const auto& t) {
    tensors[name] = tensor_to_json({t.data(), static_cast<std::size_t>(t.size())}, t.rows(),
                                   t.cols());
  };
  put("gcn.weight", p.gcn.weight);
  put("gru.weight_update", p.gru.weight_update);
  put("gru.weight_reset", p.gru.weight_reset);
  put("gru.weight_candidate", p.gru.weight_candidate);
  put("gru.bias_update", p.gru.bias_update);
  put("gru.bias_reset", p.gru.bias_reset);
  put("gru.bias_candidate", p.gru.bias_candidate);
  put("readout.weight", p.readout.weight);
  put("readout.bias", p.readout.bias);
  put("adjacency.normalized", m.adjacency.matrix);

  json doc = {{"schema_version", 1},
              {"seed", ckpt.config.seed},
              {"config", config},
              {"speed_scale", m.speed_scale},
              {"window_length", m.window_length},
              {"horizon_length", m.horizon_length},
              {"gcn_activation", p.gcn.activation == Activation::relu ? "relu" : "identity"},
              {"input_mask", m.input_mask},
              {"node_ids", ckpt.node_ids},
              {"tensors", tensors}};
  return doc.dump(1) + "\n";
}

namespace {

Checkpoint checkpoint_from_document(const json& doc) {
  if (doc.at("schema_version").get<int>() != 1) {
    throw InvalidInput("unsupported checkpoint schema_version");
  }
  Checkpoint ckpt;
  const auto& c = doc.at("config");
  ckpt.config.epochs = c.at("epochs").get<std::size_t>();
  ckpt.config.learning_rate = c.at("learning_rate").get<double>();
  ckpt.config.l1_lambda = c.at("l1_lambda").get<double>();
  ckpt.config.hidden_dim = c.at("hidden_dim").get<std::size_t>();
  ckpt.config.batch_size = c.at("batch_size").get<std::size_t>();
  ckpt.config.seed = c.at("seed").get<std::uint64_t>();
  ckpt.config.features.clear();
  for (const auto& f : c.at("features")) {
    ckpt.config.features.push_back(feature_group_from_string(f.get<std::string>()));
  }
  auto& m = ckpt.model;
  m.speed_scale = doc.at("speed_scale").get<double>();
  m.window_length = doc.at("window_length").get<std::size_t>();
  m.horizon_length = doc.at("horizon_length").get<std::size_t>();
  m.input_mask = doc.at("input_mask").get<std::vector<double>>();
  ckpt.node_ids = doc.at("node_ids").get<std::vector<std::string>>();
  auto& p = m.params;
  p.gcn.activation =
      doc.at("gcn_activation").get<std::string>() == "relu" ? Activation::relu : Activation::identity;
  const auto& t = doc.at("tensors");
  tensor_from_json(t.at("gcn.weight"), p.gcn.weight, "gcn.weight");
  tensor_from_json(t.at("gru.weight_update"), p.gru.weight_update, "gru.weight_update");
  tensor_from_json(t.at("gru.weight_reset"), p.gru.weight_reset, "gru.weight_reset");
  tensor_from_json(t.at("gru.weight_candidate"), p.gru.weight_candidate, "gru.weight_candidate");
  tensor_from_json(t.at("gru.bias_update"), p.gru.bias_update, "gru.bias_update");
  tensor_from_json(t.at("gru.bias_reset"), p.gru.bias_reset, "gru.bias_reset");
  tensor_from_json(t.at("gru.bias_candidate"), p.gru.bias_candidate, "gru.bias_candidate");
  tensor_from_json(t.at("readout.weight"), p.readout.weight, "readout.weight");
  tensor_from_json(t.at("readout.bias"), p.readout.bias, "readout.bias");
  tensor_from_json(t.at("adjacency.normalized"), m.adjacency.matrix, "adjacency.normalized");
  if (m.input_mask.size() != static_cast<std::size_t>(p.gcn.weight.rows())) {
    throw InvalidInput("input_mask length does not match gcn input dimension");
  }
  if (ckpt.node_ids.size() != m.node_count()) {
    throw InvalidInput("node_ids length does not match adjacency");
  }
  return ckpt;
}

}  // namespace

Checkpoint checkpoint_from_json(const std::string& text) {
  try {
    return checkpoint_from_document(json::parse(text));
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_atomic(path, checkpoint_to_json(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw NotFound("model not found: " + path.string());
  return checkpoint_from_json(read_file(path));
}

}  // namespace cfx
