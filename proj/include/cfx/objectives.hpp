// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cfx {

/// The four counterfactual objectives; all are minimised.
struct ObjectiveVector {
  double validity = 0.0;      // km/h
  double proximity = 0.0;     // feature units
  double sparsity = 0.0;      // count of changed genes
  double plausibility = 0.0;  // distance to observed data

  std::array<double, 4> as_array() const { return {validity, proximity, sparsity, plausibility}; }
  static ObjectiveVector from_array(std::span<const double> v);
  bool operator==(const ObjectiveVector&) const = default;
};

/// Threshold above which a gene counts as changed.
inline constexpr double kChangeTolerance = 1e-9;

double o1_validity(double predicted_mean, double target);
/// L1 distance. Throws DimensionError on length mismatch.
double o2_proximity(std::span<const double> original, std::span<const double> counterfactual);
/// L0 distance with kChangeTolerance.
std::size_t o3_sparsity(std::span<const double> original, std::span<const double> counterfactual);

/// Observed feature rows used for the plausibility objective.
class ObservedFeatureSet {
 public:
  /// Throws ConfigError when rows are ragged, empty, or fewer than k.
  ObservedFeatureSet(std::vector<std::vector<double>> rows, std::size_t k = 3);

  std::size_t k() const { return k_; }
  std::size_t size() const { return rows_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }

  /// Mean Euclidean distance to the k nearest rows by linear scan. Ties are
  /// broken by row order.
  double plausibility(std::span<const double> point) const;
  /// Same result via a sorted-projection search that prunes on the first
  /// coordinate.
  double plausibility_indexed(std::span<const double> point) const;

 private:
  std::vector<std::vector<double>> rows_;
  std::size_t k_;
  std::size_t dim_;
  std::vector<std::size_t> by_first_;  // row indices sorted by coordinate 0
};

double o4_plausibility(std::span<const double> counterfactual, const ObservedFeatureSet& observed);

enum class ConstraintKind { directional, weighting };
enum class Direction { increase, decrease };

/// A user constraint over resolved gene indices.
struct ScenarioConstraint {
  ConstraintKind kind = ConstraintKind::weighting;
  std::vector<std::size_t> genes;
  Direction direction = Direction::increase;  // directional only
  double penalty = 100.0;
};

/// Per-gene penalty table compiled from a constraint list.
class ProximityWeights {
 public:
  /// Throws ConfigError on out-of-range genes, penalty <= 1, or a gene with
  /// opposite directional requirements.
  ProximityWeights(std::size_t gene_count, std::span<const ScenarioConstraint> constraints);

  /// Multiplier for a move of `delta` (counterfactual - original) on `gene`.
  double factor(std::size_t gene, double delta) const;
  std::size_t gene_count() const { return always_.size(); }

 private:
  std::vector<double> always_;       // weighting penalty, 1 if none
  std::vector<double> when_up_;      // directional penalty applied to increases
  std::vector<double> when_down_;    // directional penalty applied to decreases
};

/// Scenario-modified proximity: penalised genes contribute penalty * |delta|.
double o2_scenario(std::span<const double> original, std::span<const double> counterfactual,
                   const ProximityWeights& weights);
double o2_scenario(std::span<const double> original, std::span<const double> counterfactual,
                   std::span<const ScenarioConstraint> constraints);

struct EvaluationWeights {
  std::array<double, 4> lambda{1.0, 0.2, 0.2, 0.6};

  /// Throws ConfigError if any weight is negative or non-finite or all are zero.
  void validate() const;
};

/// Weighted sum of max-normalised objectives. A zero maximum contributes 0.
double evaluation_score(const ObjectiveVector& candidate, const ObjectiveVector& population_max,
                        const EvaluationWeights& weights);

ObjectiveVector objective_maxima(std::span<const ObjectiveVector> set);

struct Ranking {
  std::vector<std::size_t> order;  // candidate indices, best first
  std::vector<double> scores;      // per input candidate
  ObjectiveVector maxima;
  std::size_t selected() const { return order.front(); }
};

/// Ascending evaluation score; near-equal scores (relative 1e-12) tie and are
/// broken by the objective vector lexicographically, then input order.
Ranking rank_candidates(std::span<const ObjectiveVector> candidates,
                        const EvaluationWeights& weights);

}  // namespace cfx
