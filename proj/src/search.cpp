// SPDX-License-Identifier: Apache-2.0
#include "cfx/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include "cfx/error.hpp"
#include "cfx/timeutil.hpp"

namespace cfx {

using nlohmann::json;

namespace {

constexpr EditableFeature kAllFeatures[] = {EditableFeature::poi_count,
                                            EditableFeature::lane_count,
                                            EditableFeature::speed_limit};

// Strict reader over one JSON object: every key must be consumed.
class ObjectReader {
 public:
  ObjectReader(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError(path_, "expected an object");
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = get(key);
    if (!v) throw ConfigError(field(key), "required field missing");
    return *v;
  }

  std::string field(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = doc_.begin(); it != doc_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown field");
    }
  }

 private:
  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path, "must be finite");
  return d;
}

std::uint64_t as_unsigned(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  throw ConfigError(path, "expected a non-negative integer");
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
  return v.get<bool>();
}

const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array");
  return v;
}

EditableFeature feature_at(const std::string& name, const std::string& path) {
  try {
    return editable_feature_from_string(name);
  } catch (const InvalidInput&) {
    throw ConfigError(path, "unknown feature '" + name + "'");
  }
}

std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

ConstraintSpec constraint_from_json(const json& doc, const std::string& path) {
  ObjectReader r(doc, path);
  ConstraintSpec c;
  const std::string kind = as_string(r.require("kind"), r.field("kind"));
  if (kind == "directional") {
    c.kind = ConstraintKind::directional;
  } else if (kind == "weighting") {
    c.kind = ConstraintKind::weighting;
  } else {
    throw ConfigError(r.field("kind"), "expected 'directional' or 'weighting'");
  }
  const json& genes = as_array(r.require("genes"), r.field("genes"));
  if (genes.empty()) throw ConfigError(r.field("genes"), "gene set is empty");
  for (std::size_t i = 0; i < genes.size(); ++i) {
    const std::string gpath = index_path(r.field("genes"), i);
    if (genes[i].is_string()) {
      c.genes.emplace_back(genes[i].get<std::string>());
    } else {
      c.genes.emplace_back(static_cast<std::size_t>(as_unsigned(genes[i], gpath)));
    }
  }
  const json* direction = r.get("direction");
  if (c.kind == ConstraintKind::directional) {
    if (!direction) throw ConfigError(r.field("direction"), "required for directional constraints");
    const std::string d = as_string(*direction, r.field("direction"));
    if (d == "increase") {
      c.direction = Direction::increase;
    } else if (d == "decrease") {
      c.direction = Direction::decrease;
    } else {
      throw ConfigError(r.field("direction"), "expected 'increase' or 'decrease'");
    }
  } else if (direction) {
    throw ConfigError(r.field("direction"), "not allowed for weighting constraints");
  }
  if (const json* p = r.get("penalty")) c.penalty = as_number(*p, r.field("penalty"));
  if (!(c.penalty > 1.0)) throw ConfigError(r.field("penalty"), "must be greater than 1");
  r.finish();
  return c;
}

json constraint_to_json(const ConstraintSpec& c) {
  json genes = json::array();
  for (const auto& g : c.genes) {
    if (std::holds_alternative<std::size_t>(g)) {
      genes.push_back(std::get<std::size_t>(g));
    } else {
      genes.push_back(std::get<std::string>(g));
    }
  }
  json out{{"kind", c.kind == ConstraintKind::directional ? "directional" : "weighting"},
           {"genes", genes},
           {"penalty", c.penalty}};
  if (c.kind == ConstraintKind::directional) {
    out["direction"] = c.direction == Direction::increase ? "increase" : "decrease";
  }
  return out;
}

json objectives_json(const ObjectiveVector& o) {
  return {{"validity", o.validity},
          {"proximity", o.proximity},
          {"sparsity", o.sparsity},
          {"plausibility", o.plausibility}};
}

ObjectiveVector objectives_from(const json& j) {
  return {j.at("validity").get<double>(), j.at("proximity").get<double>(),
          j.at("sparsity").get<double>(), j.at("plausibility").get<double>()};
}

std::vector<double> segment_vector(std::span<const double> genes, std::size_t pos) {
  return {genes[pos * kFeaturesPerSegment], genes[pos * kFeaturesPerSegment + 1],
          genes[pos * kFeaturesPerSegment + 2]};
}

}  // namespace

std::string to_string(EditableFeature f) {
  switch (f) {
    case EditableFeature::poi_count: return "poi_count";
    case EditableFeature::lane_count: return "lane_count";
    case EditableFeature::speed_limit: return "speed_limit";
  }
  return "poi_count";
}

EditableFeature editable_feature_from_string(const std::string& name) {
  for (auto f : kAllFeatures) {
    if (to_string(f) == name) return f;
  }
  throw InvalidInput("unknown editable feature: " + name);
}

std::map<EditableFeature, FeatureRange> SearchConfig::default_ranges() {
  return {{EditableFeature::poi_count, {0.0, 36.0}},
          {EditableFeature::lane_count, {1.0, 6.0}},
          {EditableFeature::speed_limit, {40.0, 120.0}}};
}

std::map<EditableFeature, double> SearchConfig::default_mutation_std() {
  return {{EditableFeature::poi_count, 2.0},
          {EditableFeature::lane_count, 0.5},
          {EditableFeature::speed_limit, 5.0}};
}

void SearchConfig::validate() const {
  if (target_node.empty()) throw ConfigError("$.target_node", "required");
  try {
    (void)parse_timestamp(window_start);
  } catch (const InvalidInput& e) {
    throw ConfigError("$.window_start", e.what());
  }
  if (target_speed.has_value() == target_delta.has_value()) {
    throw ConfigError("$.target_speed", "exactly one of target_speed and target_delta is required");
  }
  if (target_speed && !(std::isfinite(*target_speed) && *target_speed >= 0.0)) {
    throw ConfigError("$.target_speed", "must be a finite non-negative speed");
  }
  if (target_delta && !std::isfinite(*target_delta)) {
    throw ConfigError("$.target_delta", "must be finite");
  }
  std::set<std::string> nodes;
  for (std::size_t i = 0; i < editable_nodes.size(); ++i) {
    if (!nodes.insert(editable_nodes[i]).second) {
      throw ConfigError(index_path("$.editable_nodes", i), "duplicate node");
    }
  }
  std::set<EditableFeature> features;
  for (std::size_t i = 0; i < mutable_features.size(); ++i) {
    if (!features.insert(mutable_features[i]).second) {
      throw ConfigError(index_path("$.mutable_features", i), "duplicate feature");
    }
  }
  for (auto f : kAllFeatures) {
    const std::string name = to_string(f);
    const auto range = feasible_ranges.find(f);
    if (range == feasible_ranges.end()) throw ConfigError("$.feasible_ranges." + name, "missing");
    if (!std::isfinite(range->second.lo) || !std::isfinite(range->second.hi)) {
      throw ConfigError("$.feasible_ranges." + name, "bounds must be finite");
    }
    if (range->second.lo > range->second.hi) {
      throw ConfigError("$.feasible_ranges." + name, "lower bound exceeds upper bound");
    }
    const auto std_it = mutation_std.find(f);
    if (std_it == mutation_std.end()) throw ConfigError("$.mutation_std." + name, "missing");
    if (!(std_it->second > 0.0) || !std::isfinite(std_it->second)) {
      throw ConfigError("$.mutation_std." + name, "must be a positive finite number");
    }
  }
  if (population_size < 2 || population_size % 2 != 0) {
    throw ConfigError("$.population_size", "must be a positive even integer");
  }
  if (generations == 0) throw ConfigError("$.generations", "must be positive");
  if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0)) {
    throw ConfigError("$.mutation_prob", "must lie in [0, 1]");
  }
  if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0)) {
    throw ConfigError("$.crossover_prob", "must lie in [0, 1]");
  }
  if (plausibility_k == 0) throw ConfigError("$.plausibility_k", "must be positive");
  weights.validate();
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const std::string path = index_path("$.constraints", i);
    if (constraints[i].genes.empty()) throw ConfigError(path + ".genes", "gene set is empty");
    if (!(constraints[i].penalty > 1.0) || !std::isfinite(constraints[i].penalty)) {
      throw ConfigError(path + ".penalty", "must be a finite number greater than 1");
    }
  }
}

SearchConfig search_config_from_json(const json& doc) {
  ObjectReader r(doc, "$");
  SearchConfig c;
  c.target_node = as_string(r.require("target_node"), "$.target_node");
  c.window_start = as_string(r.require("window_start"), "$.window_start");
  if (const json* v = r.get("target_speed")) c.target_speed = as_number(*v, "$.target_speed");
  if (const json* v = r.get("target_delta")) c.target_delta = as_number(*v, "$.target_delta");
  if (const json* v = r.get("editable_nodes")) {
    const json& arr = as_array(*v, "$.editable_nodes");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      c.editable_nodes.push_back(as_string(arr[i], index_path("$.editable_nodes", i)));
    }
  }
  if (const json* v = r.get("mutable_features")) {
    const json& arr = as_array(*v, "$.mutable_features");
    c.mutable_features.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = index_path("$.mutable_features", i);
      c.mutable_features.push_back(feature_at(as_string(arr[i], path), path));
    }
  }
  if (const json* v = r.get("feasible_ranges")) {
    ObjectReader ranges(*v, "$.feasible_ranges");
    for (auto f : kAllFeatures) {
      const std::string path = ranges.field(to_string(f));
      const json* pair = ranges.get(to_string(f));
      if (!pair) continue;
      if (!pair->is_array() || pair->size() != 2) throw ConfigError(path, "expected [lo, hi]");
      c.feasible_ranges[f] = {as_number((*pair)[0], path + "[0]"),
                              as_number((*pair)[1], path + "[1]")};
    }
    ranges.finish();
  }
  if (const json* v = r.get("mutation_std")) {
    ObjectReader stds(*v, "$.mutation_std");
    for (auto f : kAllFeatures) {
      if (const json* s = stds.get(to_string(f))) {
        c.mutation_std[f] = as_number(*s, stds.field(to_string(f)));
      }
    }
    stds.finish();
  }
  if (const json* v = r.get("tie_speed_limit")) c.tie_speed_limit = as_bool(*v, "$.tie_speed_limit");
  if (const json* v = r.get("population_size")) {
    c.population_size = as_unsigned(*v, "$.population_size");
  }
  if (const json* v = r.get("generations")) c.generations = as_unsigned(*v, "$.generations");
  if (const json* v = r.get("mutation_prob")) c.mutation_prob = as_number(*v, "$.mutation_prob");
  if (const json* v = r.get("crossover_prob")) c.crossover_prob = as_number(*v, "$.crossover_prob");
  if (const json* v = r.get("seed")) c.seed = as_unsigned(*v, "$.seed");
  if (const json* v = r.get("plausibility_k")) c.plausibility_k = as_unsigned(*v, "$.plausibility_k");
  if (const json* v = r.get("weights")) {
    const json& arr = as_array(*v, "$.weights");
    if (arr.size() != 4) throw ConfigError("$.weights", "expected four weights");
    for (std::size_t i = 0; i < 4; ++i) {
      c.weights.lambda[i] = as_number(arr[i], index_path("$.weights", i));
    }
  }
  if (const json* v = r.get("constraints")) {
    const json& arr = as_array(*v, "$.constraints");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      c.constraints.push_back(constraint_from_json(arr[i], index_path("$.constraints", i)));
    }
  }
  r.finish();
  c.validate();
  return c;
}

SearchConfig parse_search_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("malformed JSON: ") + e.what());
  }
  return search_config_from_json(doc);
}

json search_config_to_json(const SearchConfig& c) {
  json ranges = json::object();
  for (const auto& [f, r] : c.feasible_ranges) ranges[to_string(f)] = json::array({r.lo, r.hi});
  json stds = json::object();
  for (const auto& [f, s] : c.mutation_std) stds[to_string(f)] = s;
  json features = json::array();
  for (auto f : c.mutable_features) features.push_back(to_string(f));
  json constraints = json::array();
  for (const auto& con : c.constraints) constraints.push_back(constraint_to_json(con));
  json out{{"target_node", c.target_node},
           {"window_start", c.window_start},
           {"editable_nodes", c.editable_nodes},
           {"mutable_features", features},
           {"feasible_ranges", ranges},
           {"mutation_std", stds},
           {"tie_speed_limit", c.tie_speed_limit},
           {"population_size", c.population_size},
           {"generations", c.generations},
           {"mutation_prob", c.mutation_prob},
           {"crossover_prob", c.crossover_prob},
           {"seed", c.seed},
           {"plausibility_k", c.plausibility_k},
           {"weights", c.weights.lambda},
           {"constraints", constraints}};
  if (c.target_speed) out["target_speed"] = *c.target_speed;
  if (c.target_delta) out["target_delta"] = *c.target_delta;
  return out;
}

std::string dump_search_config(const SearchConfig& config) {
  return search_config_to_json(config).dump(2) + "\n";
}

namespace {

std::vector<std::size_t> resolve_gene_ref(const GeneRef& ref, const GeneLayout& layout,
                                          const RoadGraph& graph, const std::string& path) {
  if (std::holds_alternative<std::size_t>(ref)) {
    const std::size_t idx = std::get<std::size_t>(ref);
    if (idx >= layout.size()) {
      throw ConfigError(path, "gene index " + std::to_string(idx) + " out of range");
    }
    return {idx};
  }
  const std::string& text = std::get<std::string>(ref);
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    const EditableFeature f = feature_at(text, path);
    std::vector<std::size_t> out;
    for (std::size_t pos = 0; pos < layout.segments.size(); ++pos) out.push_back(layout.gene(pos, f));
    return out;
  }
  const std::string node = text.substr(0, colon);
  const EditableFeature f = feature_at(text.substr(colon + 1), path);
  const auto idx = graph.index_of(node);
  const auto it = idx ? std::find(layout.segments.begin(), layout.segments.end(), *idx)
                      : layout.segments.end();
  if (it == layout.segments.end()) throw ConfigError(path, "node '" + node + "' is not editable");
  return {layout.gene(static_cast<std::size_t>(it - layout.segments.begin()), f)};
}

}  // namespace

SearchProblem prepare_search(const SearchConfig& config, const Corpus& corpus,
                             const TgcnModel& model) {
  config.validate();
  const RoadGraph& graph = corpus.graph;
  if (model.node_count() != graph.node_count()) {
    throw ConfigError("$", "model has " + std::to_string(model.node_count()) +
                               " nodes but the corpus graph has " +
                               std::to_string(graph.node_count()));
  }
  SearchProblem p;
  p.config = config;

  const auto target = graph.index_of(config.target_node);
  if (!target) throw ConfigError("$.target_node", "unknown node '" + config.target_node + "'");
  p.target_node = *target;

  const Timestamp start = parse_timestamp(config.window_start);
  const auto offset = std::chrono::duration_cast<std::chrono::minutes>(start - corpus.speeds.start);
  const long interval = corpus.speeds.interval_minutes;
  if (offset.count() < 0 || offset.count() % interval != 0) {
    throw ConfigError("$.window_start", "not aligned to a corpus time step");
  }
  p.window_step = static_cast<std::size_t>(offset.count() / interval);
  if (p.window_step + model.window_length + model.horizon_length > corpus.speeds.time_steps()) {
    throw ConfigError("$.window_start", "window extends past the end of the corpus");
  }

  if (config.editable_nodes.empty()) {
    for (std::size_t i = 0; i < graph.node_count(); ++i) {
      if (graph.road[i] == graph.road[p.target_node]) p.layout.segments.push_back(i);
    }
  } else {
    for (std::size_t i = 0; i < config.editable_nodes.size(); ++i) {
      const auto idx = graph.index_of(config.editable_nodes[i]);
      if (!idx) {
        throw ConfigError(index_path("$.editable_nodes", i),
                          "unknown node '" + config.editable_nodes[i] + "'");
      }
      if (std::find(p.layout.segments.begin(), p.layout.segments.end(), *idx) !=
          p.layout.segments.end()) {
        throw ConfigError(index_path("$.editable_nodes", i), "duplicate node");
      }
      p.layout.segments.push_back(*idx);
    }
  }

  for (std::size_t node : p.layout.segments) p.layout.segment_ids.push_back(graph.node_ids[node]);
  std::set<EditableFeature> mutable_set(config.mutable_features.begin(),
                                        config.mutable_features.end());
  auto& space = p.space;
  for (std::size_t node : p.layout.segments) {
    for (auto f : kAllFeatures) {
      const FeatureRange range = config.feasible_ranges.at(f);
      p.layout.slots.push_back({node, f});
      space.lower.push_back(range.lo);
      space.upper.push_back(range.hi);
      space.mutation_std.push_back(config.mutation_std.at(f));
      space.integer.push_back(f != EditableFeature::speed_limit);
      space.mutable_gene.push_back(mutable_set.count(f) > 0);
      const StaticFeatures& s = corpus.statics[node];
      const double value = f == EditableFeature::poi_count    ? s.poi_count
                           : f == EditableFeature::lane_count ? s.lane_count
                                                              : s.speed_limit;
      if (value < range.lo || value > range.hi) {
        throw ConfigError("$.feasible_ranges." + to_string(f),
                          "original value of node '" + graph.node_ids[node] +
                              "' lies outside the range");
      }
      p.original.push_back(value);
    }
  }

  if (config.tie_speed_limit) {
    std::map<int, std::vector<std::size_t>> by_road;
    for (std::size_t pos = 0; pos < p.layout.segments.size(); ++pos) {
      by_road[graph.road[p.layout.segments[pos]]].push_back(
          p.layout.gene(pos, EditableFeature::speed_limit));
    }
    for (auto& [road, genes] : by_road) {
      if (genes.size() < 2) continue;
      for (std::size_t g : genes) {
        if (p.original[g] != p.original[genes.front()]) {
          throw ConfigError("$.tie_speed_limit",
                            "segments of road " + std::to_string(road) +
                                " have different speed limits");
        }
      }
      space.tied_groups.push_back(genes);
    }
  }
  space.validate();

  for (std::size_t i = 0; i < config.constraints.size(); ++i) {
    const auto& spec = config.constraints[i];
    const std::string path = index_path("$.constraints", i);
    ScenarioConstraint con{spec.kind, {}, spec.direction, spec.penalty};
    std::set<std::size_t> genes;
    for (std::size_t j = 0; j < spec.genes.size(); ++j) {
      const std::string gpath = index_path(path + ".genes", j);
      for (std::size_t g : resolve_gene_ref(spec.genes[j], p.layout, graph, gpath)) {
        if (!space.mutable_gene[g]) throw ConfigError(gpath, "references an immutable gene");
        genes.insert(g);
      }
    }
    con.genes.assign(genes.begin(), genes.end());
    p.constraints.push_back(std::move(con));
  }
  if (!p.constraints.empty()) p.proximity.emplace(p.layout.size(), p.constraints);

  std::vector<std::vector<double>> rows;
  rows.reserve(corpus.statics.size());
  for (const auto& s : corpus.statics) {
    rows.push_back({static_cast<double>(s.poi_count), static_cast<double>(s.lane_count),
                    s.speed_limit});
  }
  if (config.plausibility_k > rows.size()) {
    throw ConfigError("$.plausibility_k", "exceeds the number of observed segments");
  }
  p.observed.emplace(std::move(rows), config.plausibility_k);

  const WindowSpec spec{model.window_length, model.horizon_length, 1};
  p.base_window = window_at(corpus.speeds, corpus.statics, corpus.context, p.window_step, spec,
                            model.speed_scale);
  p.original_prediction = predict_target(p, model, p.original);
  p.target_speed = config.target_speed ? *config.target_speed
                                       : p.original_prediction + *config.target_delta;
  return p;
}

std::vector<StaticFeatures> apply_genes(const SearchProblem& problem,
                                        std::span<const StaticFeatures> statics,
                                        std::span<const double> genes) {
  if (genes.size() != problem.layout.size()) throw DimensionError("gene vector length mismatch");
  std::vector<StaticFeatures> out(statics.begin(), statics.end());
  for (std::size_t pos = 0; pos < problem.layout.segments.size(); ++pos) {
    StaticFeatures& s = out[problem.layout.segments[pos]];
    s.poi_count = static_cast<int>(std::lround(genes[pos * kFeaturesPerSegment]));
    s.lane_count = static_cast<int>(std::lround(genes[pos * kFeaturesPerSegment + 1]));
    s.speed_limit = genes[pos * kFeaturesPerSegment + 2];
  }
  return out;
}

double predict_target(const SearchProblem& problem, const TgcnModel& model,
                      std::span<const double> genes) {
  if (genes.size() != problem.layout.size()) throw DimensionError("gene vector length mismatch");
  FeatureWindow window = problem.base_window;
  for (std::size_t pos = 0; pos < problem.layout.segments.size(); ++pos) {
    StaticFeatures s;
    s.poi_count = static_cast<int>(std::lround(genes[pos * kFeaturesPerSegment]));
    s.lane_count = static_cast<int>(std::lround(genes[pos * kFeaturesPerSegment + 1]));
    s.speed_limit = genes[pos * kFeaturesPerSegment + 2];
    patch_static(window, problem.layout.segments[pos], s);
  }
  return model_forward(model, window).col(static_cast<Eigen::Index>(problem.target_node)).mean();
}

ObjectiveVector evaluate_candidate(const SearchProblem& problem, const TgcnModel& model,
                                   std::span<const double> genes) {
  ObjectiveVector o;
  o.validity = o1_validity(predict_target(problem, model, genes), problem.target_speed);
  o.proximity = problem.proximity ? o2_scenario(problem.original, genes, *problem.proximity)
                                  : o2_proximity(problem.original, genes);
  o.sparsity = static_cast<double>(o3_sparsity(problem.original, genes));
  double plaus = 0.0;
  const std::size_t segments = problem.layout.segments.size();
  for (std::size_t pos = 0; pos < segments; ++pos) {
    plaus += problem.observed->plausibility(segment_vector(genes, pos));
  }
  o.plausibility = segments ? plaus / static_cast<double>(segments) : 0.0;
  return o;
}

SearchOutcome run_search(const SearchProblem& problem, const TgcnModel& model,
                         const nsga2::EvolveHooks& hooks) {
  const SearchConfig& c = problem.config;
  nsga2::EngineConfig engine;
  engine.population_size = c.population_size;
  engine.generations = c.generations;
  engine.mutation_prob = c.mutation_prob;
  engine.crossover_prob = c.crossover_prob;
  engine.seed = c.seed;
  auto evaluate = [&](std::span<const double> genes) {
    const auto o = evaluate_candidate(problem, model, genes).as_array();
    return nsga2::Objectives(o.begin(), o.end());
  };
  auto result = nsga2::evolve(problem.original, problem.space, engine, evaluate, hooks);
  SearchOutcome out;
  out.evaluations = result.evaluations;
  out.cancelled = result.cancelled;
  for (std::size_t i = 0; i < result.pareto.size(); ++i) {
    out.front.push_back({i, result.pareto[i].genes,
                         ObjectiveVector::from_array(result.pareto[i].objectives)});
  }
  out.history = std::move(result.history);
  return out;
}

FrontDocument make_front_document(const SearchProblem& problem, const SearchOutcome& outcome) {
  FrontDocument doc;
  doc.target_node = problem.config.target_node;
  doc.window_start = problem.config.window_start;
  doc.target_speed = problem.target_speed;
  doc.original_prediction = problem.original_prediction;
  doc.segment_ids = problem.layout.segment_ids;
  doc.original = problem.original;
  doc.candidates = outcome.front;
  return doc;
}

std::string front_to_json(const FrontDocument& doc) {
  json candidates = json::array();
  for (const auto& c : doc.candidates) {
    candidates.push_back(
        {{"id", c.id}, {"genes", c.genes}, {"objectives", objectives_json(c.objectives)}});
  }
  json features = json::array();
  for (auto f : kAllFeatures) features.push_back(to_string(f));
  json out{{"schema_version", 1},
           {"unit", "km/h"},
           {"target_node", doc.target_node},
           {"window_start", doc.window_start},
           {"target_speed", doc.target_speed},
           {"original_prediction", doc.original_prediction},
           {"segments", doc.segment_ids},
           {"segment_features", features},
           {"original", doc.original},
           {"maxima_population", "final_front"},
           {"candidates", candidates}};
  return out.dump(2) + "\n";
}

FrontDocument front_from_json(const std::string& text) {
  FrontDocument doc;
  try {
    const json j = json::parse(text);
    doc.target_node = j.at("target_node").get<std::string>();
    doc.window_start = j.at("window_start").get<std::string>();
    doc.target_speed = j.at("target_speed").get<double>();
    doc.original_prediction = j.at("original_prediction").get<double>();
    doc.segment_ids = j.at("segments").get<std::vector<std::string>>();
    doc.original = j.at("original").get<std::vector<double>>();
    for (const auto& c : j.at("candidates")) {
      doc.candidates.push_back({c.at("id").get<std::size_t>(),
                                c.at("genes").get<std::vector<double>>(),
                                objectives_from(c.at("objectives"))});
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed front document: ") + e.what());
  }
  return doc;
}

std::string history_to_ndjson(const std::vector<nsga2::GenerationRecord>& history) {
  std::ostringstream out;
  for (const auto& record : history) {
    json candidates = json::array();
    for (const auto& ind : record.population) {
      candidates.push_back(
          {{"genes", ind.genes}, {"objectives", ind.objectives}, {"rank", ind.rank}});
    }
    out << json{{"generation", record.generation}, {"candidates", candidates}}.dump() << '\n';
  }
  return out.str();
}

std::string rank_to_json(const FrontDocument& front, const EvaluationWeights& weights) {
  weights.validate();
  if (front.candidates.empty()) throw InvalidInput("cannot rank an empty front");
  std::vector<ObjectiveVector> objectives;
  objectives.reserve(front.candidates.size());
  for (const auto& c : front.candidates) objectives.push_back(c.objectives);
  const Ranking ranking = rank_candidates(objectives, weights);
  json ordered = json::array();
  json order = json::array();
  for (std::size_t pos = 0; pos < ranking.order.size(); ++pos) {
    const auto& c = front.candidates[ranking.order[pos]];
    order.push_back(c.id);
    ordered.push_back({{"position", pos},
                       {"id", c.id},
                       {"score", ranking.scores[ranking.order[pos]]},
                       {"objectives", objectives_json(c.objectives)},
                       {"genes", c.genes}});
  }
  json out{{"weights", weights.lambda},
           {"maxima", objectives_json(ranking.maxima)},
           {"order", order},
           {"candidates", ordered},
           {"selected", front.candidates[ranking.selected()].id}};
  return out.dump(2) + "\n";
}

EvaluationWeights parse_weights(const std::string& text) {
  EvaluationWeights w;
  std::stringstream in(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(in, item, ',')) {
    if (i >= 4) throw ConfigError("$.weights", "expected four comma-separated weights");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw ConfigError(index_path("$.weights", i), "not a number: '" + item + "'");
    }
    w.lambda[i++] = v;
  }
  if (i != 4) throw ConfigError("$.weights", "expected four comma-separated weights");
  w.validate();
  return w;
}

EvaluationWeights weights_from_json(const json& doc) {
  ObjectReader r(doc, "$");
  const json& arr = as_array(r.require("weights"), "$.weights");
  r.finish();
  if (arr.size() != 4) throw ConfigError("$.weights", "expected four weights");
  EvaluationWeights w;
  for (std::size_t i = 0; i < 4; ++i) w.lambda[i] = as_number(arr[i], index_path("$.weights", i));
  w.validate();
  return w;
}

}  // namespace cfx
