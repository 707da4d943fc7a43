// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfx/corpus.hpp"
#include "cfx/forecaster.hpp"
#include "cfx/search.hpp"

namespace cfx {

/// One value per sliding window of a day: the mean over the forecast horizon.
struct DaySeries {
  std::vector<std::string> timestamps;  // first forecast step of each window
  std::vector<double> original;         // km/h
  std::vector<double> counterfactual;   // km/h
  std::vector<double> truth;            // km/h
};

/// Windows of `day` (stride 1) predicted with the corpus statics and with
/// `counterfactual` statics. Throws RangeError when the day is not in the corpus.
DaySeries counterfactual_day_prediction(const TgcnModel& model, const Corpus& corpus,
                                        std::span<const StaticFeatures> counterfactual,
                                        std::size_t day, std::size_t node);

/// Signed deltas (counterfactual - original) aggregated over a day.
struct NodeImpact {
  std::string node;
  double max_increase = 0.0;  // largest delta
  double max_decrease = 0.0;  // smallest delta
  double mean_delta = 0.0;
};

struct FeatureDiff {
  std::string node;
  StaticFeatures original;
  StaticFeatures counterfactual;
  double delta_poi() const { return counterfactual.poi_count - original.poi_count; }
  double delta_lanes() const { return counterfactual.lane_count - original.lane_count; }
  double delta_speed_limit() const { return counterfactual.speed_limit - original.speed_limit; }
};

struct ImpactReport {
  std::size_t day = 0;
  std::string date;
  std::string target_node;
  std::size_t candidate = 0;
  DaySeries target;
  std::vector<NodeImpact> nodes;  // graph order
  NodeImpact worst;               // node with the smallest max_decrease
  std::vector<FeatureDiff> diff;  // editable segments only
  double total_poi = 0.0;
  double total_lanes = 0.0;
  double total_speed_limit = 0.0;
};

ImpactReport network_impact(const TgcnModel& model, const Corpus& corpus,
                            std::span<const StaticFeatures> counterfactual, std::size_t day,
                            std::size_t target_node);

/// Impact of one saved front candidate. `day` defaults to the day containing
/// the search window. Throws NotFound for an unknown candidate id.
ImpactReport candidate_impact(const TgcnModel& model, const Corpus& corpus,
                              const FrontDocument& front, std::size_t candidate,
                              std::optional<std::size_t> day = std::nullopt);

std::string impact_to_json(const ImpactReport& report);
std::string diff_to_csv(const ImpactReport& report);

/// Columns: candidate, validity, proximity, sparsity, plausibility, score.
/// The score uses `weights` with maxima over the same front.
std::string export_objective_distribution(const FrontDocument& front,
                                          const EvaluationWeights& weights);

struct DistributionRow {
  std::size_t candidate = 0;
  ObjectiveVector objectives;
  double score = 0.0;
};
std::vector<DistributionRow> read_objective_distribution(const std::string& csv);

/// Spearman rank correlation with average ranks for ties. NaN when either
/// side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace cfx
