// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cfx/corpus.hpp"
#include "cfx/forecaster.hpp"
#include "cfx/nsga2.hpp"
#include "cfx/objectives.hpp"

namespace cfx {

/// Static features a counterfactual may edit, in gene order within a segment.
enum class EditableFeature { poi_count, lane_count, speed_limit };
inline constexpr std::size_t kFeaturesPerSegment = 3;

std::string to_string(EditableFeature f);
EditableFeature editable_feature_from_string(const std::string& name);

struct FeatureRange {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const FeatureRange&) const = default;
};

/// Constraint gene selector: a gene index, a feature name for every gene of
/// that feature, or "node_id:feature".
using GeneRef = std::variant<std::size_t, std::string>;

struct ConstraintSpec {
  ConstraintKind kind = ConstraintKind::weighting;
  std::vector<GeneRef> genes;
  Direction direction = Direction::increase;
  double penalty = 100.0;
  bool operator==(const ConstraintSpec&) const = default;
};

/// Request document for a counterfactual search. Exactly one of target_speed
/// and target_delta is set; the delta is relative to the original prediction.
struct SearchConfig {
  std::string target_node;
  std::string window_start;  // first input step, YYYY-MM-DDTHH:MM:SS
  std::optional<double> target_speed;
  std::optional<double> target_delta;
  std::vector<std::string> editable_nodes;  // empty: every segment of the target's road
  std::vector<EditableFeature> mutable_features{EditableFeature::poi_count,
                                                EditableFeature::lane_count,
                                                EditableFeature::speed_limit};
  std::map<EditableFeature, FeatureRange> feasible_ranges = default_ranges();
  std::map<EditableFeature, double> mutation_std = default_mutation_std();
  bool tie_speed_limit = true;
  std::size_t population_size = 64;
  std::size_t generations = 100;
  double mutation_prob = 0.3;
  double crossover_prob = 0.7;
  std::uint64_t seed = 1;
  std::size_t plausibility_k = 3;
  EvaluationWeights weights;
  std::vector<ConstraintSpec> constraints;

  static std::map<EditableFeature, FeatureRange> default_ranges();
  static std::map<EditableFeature, double> default_mutation_std();

  /// Field checks that need no corpus. Throws ConfigError with a field path.
  void validate() const;
};

/// Strict parse: unknown fields and type mismatches throw ConfigError naming
/// the field path. Missing optional fields take their defaults.
SearchConfig search_config_from_json(const nlohmann::json& doc);
SearchConfig parse_search_config(const std::string& text);
/// Every field written explicitly with sorted keys.
nlohmann::json search_config_to_json(const SearchConfig& config);
std::string dump_search_config(const SearchConfig& config);

struct GeneSlot {
  std::size_t node = 0;  // graph index
  EditableFeature feature = EditableFeature::poi_count;
};

/// Decision vector layout: three genes per editable segment.
struct GeneLayout {
  std::vector<std::size_t> segments;  // graph indices, in config order
  std::vector<std::string> segment_ids;
  std::vector<GeneSlot> slots;

  std::size_t size() const { return slots.size(); }
  std::size_t gene(std::size_t segment_pos, EditableFeature f) const {
    return segment_pos * kFeaturesPerSegment + static_cast<std::size_t>(f);
  }
};

/// Everything a search needs, resolved against a corpus and model.
struct SearchProblem {
  SearchConfig config;
  GeneLayout layout;
  nsga2::GeneSpace space;
  std::vector<double> original;
  std::size_t target_node = 0;
  std::size_t window_step = 0;
  FeatureWindow base_window;
  double original_prediction = 0.0;  // km/h, mean over the horizon
  double target_speed = 0.0;
  std::vector<ScenarioConstraint> constraints;
  std::optional<ProximityWeights> proximity;  // set when constraints exist
  std::optional<ObservedFeatureSet> observed;
};

/// Resolves node ids, window, gene space and constraints. Throws ConfigError
/// with a field path on any inconsistency.
SearchProblem prepare_search(const SearchConfig& config, const Corpus& corpus,
                             const TgcnModel& model);

/// Static features of every segment after applying `genes`.
std::vector<StaticFeatures> apply_genes(const SearchProblem& problem,
                                        std::span<const StaticFeatures> statics,
                                        std::span<const double> genes);

/// Mean predicted km/h on the target node over the horizon with `genes` applied.
double predict_target(const SearchProblem& problem, const TgcnModel& model,
                      std::span<const double> genes);

ObjectiveVector evaluate_candidate(const SearchProblem& problem, const TgcnModel& model,
                                   std::span<const double> genes);

struct FrontCandidate {
  std::size_t id = 0;
  std::vector<double> genes;
  ObjectiveVector objectives;
};

struct SearchOutcome {
  std::vector<FrontCandidate> front;
  std::vector<nsga2::GenerationRecord> history;
  std::size_t evaluations = 0;
  bool cancelled = false;
};

SearchOutcome run_search(const SearchProblem& problem, const TgcnModel& model,
                         const nsga2::EvolveHooks& hooks = {});

/// Saved final front with the context needed to rank it and compute impact.
struct FrontDocument {
  std::string target_node;
  std::string window_start;
  double target_speed = 0.0;
  double original_prediction = 0.0;
  std::vector<std::string> segment_ids;
  std::vector<double> original;
  std::vector<FrontCandidate> candidates;
};

FrontDocument make_front_document(const SearchProblem& problem, const SearchOutcome& outcome);
std::string front_to_json(const FrontDocument& doc);
FrontDocument front_from_json(const std::string& text);

/// One JSON object per generation: per-candidate genes, objectives and rank.
std::string history_to_ndjson(const std::vector<nsga2::GenerationRecord>& history);

/// Ranked view of a front shared by the CLI and the HTTP service.
std::string rank_to_json(const FrontDocument& front, const EvaluationWeights& weights);

/// Parses "1,0.2,0.2,0.6". Throws ConfigError on a malformed list.
EvaluationWeights parse_weights(const std::string& text);
/// Strict {"weights":[...]} body.
EvaluationWeights weights_from_json(const nlohmann::json& doc);

}  // namespace cfx
