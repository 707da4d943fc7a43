// SPDX-License-Identifier: Apache-2.0
#include "cfx/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "cfx/error.hpp"

namespace cfx {

ObjectiveVector ObjectiveVector::from_array(std::span<const double> v) {
  if (v.size() != 4) throw DimensionError("objective vector must have 4 entries");
  return {v[0], v[1], v[2], v[3]};
}

double o1_validity(double predicted_mean, double target) {
  return std::abs(predicted_mean - target);
}

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("gene vectors differ in length (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  }
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// Mean of the k smallest (distance, row) pairs, summed in sorted order so any
// search strategy that finds the same set gives the same bits.
double mean_of_best(std::vector<std::pair<double, std::size_t>> best, std::size_t k) {
  std::sort(best.begin(), best.end());
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += best[i].first;
  return total / static_cast<double>(k);
}

}  // namespace

double o2_proximity(std::span<const double> original, std::span<const double> counterfactual) {
  require_same_length(original, counterfactual);
  double total = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    total += std::abs(original[i] - counterfactual[i]);
  }
  return total;
}

std::size_t o3_sparsity(std::span<const double> original, std::span<const double> counterfactual) {
  require_same_length(original, counterfactual);
  std::size_t count = 0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (std::abs(original[i] - counterfactual[i]) > kChangeTolerance) ++count;
  }
  return count;
}

ObservedFeatureSet::ObservedFeatureSet(std::vector<std::vector<double>> rows, std::size_t k)
    : rows_(std::move(rows)), k_(k), dim_(0) {
  if (k_ == 0) throw ConfigError("$.plausibility_k", "k must be positive");
  if (rows_.empty()) throw ConfigError("$.observed", "observed feature set is empty");
  if (rows_.size() < k_) {
    throw ConfigError("$.plausibility_k", "k = " + std::to_string(k_) + " exceeds the " +
                                              std::to_string(rows_.size()) + " observed rows");
  }
  dim_ = rows_.front().size();
  for (const auto& r : rows_) {
    if (r.size() != dim_) throw ConfigError("$.observed", "observed rows are ragged");
  }
  by_first_.resize(rows_.size());
  std::iota(by_first_.begin(), by_first_.end(), std::size_t{0});
  if (dim_ > 0) {
    std::stable_sort(by_first_.begin(), by_first_.end(),
                     [&](std::size_t a, std::size_t b) { return rows_[a][0] < rows_[b][0]; });
  }
}

double ObservedFeatureSet::plausibility(std::span<const double> point) const {
  if (point.size() != dim_) throw DimensionError("point dimension does not match observed rows");
  std::vector<std::pair<double, std::size_t>> all;
  all.reserve(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) all.emplace_back(euclidean(point, rows_[i]), i);
  return mean_of_best(std::move(all), k_);
}

double ObservedFeatureSet::plausibility_indexed(std::span<const double> point) const {
  if (point.size() != dim_) throw DimensionError("point dimension does not match observed rows");
  if (dim_ == 0) return 0.0;
  const double x0 = point[0];
  // Start at the insertion point and walk outwards; |dx0| lower-bounds the distance.
  auto mid = std::lower_bound(by_first_.begin(), by_first_.end(), x0,
                              [&](std::size_t r, double v) { return rows_[r][0] < v; });
  std::ptrdiff_t lo = (mid - by_first_.begin()) - 1;
  std::ptrdiff_t hi = mid - by_first_.begin();
  const auto n = static_cast<std::ptrdiff_t>(by_first_.size());

  std::vector<std::pair<double, std::size_t>> best;  // kept sorted, size <= k
  auto offer = [&](std::size_t row) {
    std::pair<double, std::size_t> cand{euclidean(point, rows_[row]), row};
    auto pos = std::upper_bound(best.begin(), best.end(), cand);
    if (best.size() < k_) {
      best.insert(pos, cand);
    } else if (pos != best.end()) {
      best.insert(pos, cand);
      best.pop_back();
    }
  };
  while (lo >= 0 || hi < n) {
    const double dlo = lo >= 0 ? x0 - rows_[by_first_[static_cast<std::size_t>(lo)]][0]
                               : std::numeric_limits<double>::infinity();
    const double dhi = hi < n ? rows_[by_first_[static_cast<std::size_t>(hi)]][0] - x0
                              : std::numeric_limits<double>::infinity();
    const double gap = std::min(dlo, dhi);
    // Rows at exactly the k-th distance may still win on row index.
    if (best.size() == k_ && gap > best.back().first) break;
    if (dlo <= dhi) {
      offer(by_first_[static_cast<std::size_t>(lo--)]);
    } else {
      offer(by_first_[static_cast<std::size_t>(hi++)]);
    }
  }
  return mean_of_best(std::move(best), k_);
}

double o4_plausibility(std::span<const double> counterfactual, const ObservedFeatureSet& observed) {
  return observed.plausibility(counterfactual);
}

ProximityWeights::ProximityWeights(std::size_t gene_count,
                                   std::span<const ScenarioConstraint> constraints)
    : always_(gene_count, 1.0), when_up_(gene_count, 1.0), when_down_(gene_count, 1.0) {
  std::vector<int> required(gene_count, 0);  // +1 increase, -1 decrease
  for (std::size_t c = 0; c < constraints.size(); ++c) {
    const auto& con = constraints[c];
    const std::string path = "$.constraints[" + std::to_string(c) + "]";
    if (!(con.penalty > 1.0) || !std::isfinite(con.penalty)) {
      throw ConfigError(path + ".penalty", "penalty must be a finite number greater than 1");
    }
    if (con.genes.empty()) throw ConfigError(path + ".genes", "gene set is empty");
    for (std::size_t gene : con.genes) {
      if (gene >= gene_count) {
        throw ConfigError(path + ".genes", "gene index " + std::to_string(gene) + " out of range");
      }
      if (con.kind == ConstraintKind::weighting) {
        always_[gene] = std::max(always_[gene], con.penalty);
        continue;
      }
      const int dir = con.direction == Direction::increase ? 1 : -1;
      if (required[gene] != 0 && required[gene] != dir) {
        throw ConfigError(path + ".direction",
                          "conflicting directional constraints on gene " + std::to_string(gene));
      }
      required[gene] = dir;
      auto& slot = dir > 0 ? when_down_[gene] : when_up_[gene];
      slot = std::max(slot, con.penalty);
    }
  }
}

double ProximityWeights::factor(std::size_t gene, double delta) const {
  const double directional = delta > 0.0 ? when_up_[gene] : (delta < 0.0 ? when_down_[gene] : 1.0);
  return std::max(always_[gene], directional);
}

double o2_scenario(std::span<const double> original, std::span<const double> counterfactual,
                   const ProximityWeights& weights) {
  require_same_length(original, counterfactual);
  if (weights.gene_count() != original.size()) {
    throw DimensionError("constraint table does not match gene count");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    const double delta = counterfactual[i] - original[i];
    total += weights.factor(i, delta) * std::abs(delta);
  }
  return total;
}

double o2_scenario(std::span<const double> original, std::span<const double> counterfactual,
                   std::span<const ScenarioConstraint> constraints) {
  return o2_scenario(original, counterfactual, ProximityWeights(original.size(), constraints));
}

void EvaluationWeights::validate() const {
  bool any_positive = false;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (!std::isfinite(lambda[i]) || lambda[i] < 0.0) {
      throw ConfigError("$.weights[" + std::to_string(i) + "]",
                        "weights must be finite and non-negative");
    }
    any_positive = any_positive || lambda[i] > 0.0;
  }
  if (!any_positive) throw ConfigError("$.weights", "at least one weight must be positive");
}

double evaluation_score(const ObjectiveVector& candidate, const ObjectiveVector& population_max,
                        const EvaluationWeights& weights) {
  const auto o = candidate.as_array();
  const auto m = population_max.as_array();
  double score = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (m[i] > 0.0) score += weights.lambda[i] * (o[i] / m[i]);
  }
  return score;
}

ObjectiveVector objective_maxima(std::span<const ObjectiveVector> set) {
  std::array<double, 4> m{0.0, 0.0, 0.0, 0.0};
  for (const auto& c : set) {
    const auto o = c.as_array();
    for (std::size_t i = 0; i < 4; ++i) m[i] = std::max(m[i], o[i]);
  }
  return ObjectiveVector::from_array(m);
}

Ranking rank_candidates(std::span<const ObjectiveVector> candidates,
                        const EvaluationWeights& weights) {
  weights.validate();
  Ranking r;
  r.maxima = objective_maxima(candidates);
  r.scores.reserve(candidates.size());
  for (const auto& c : candidates) r.scores.push_back(evaluation_score(c, r.maxima, weights));

  r.order.resize(candidates.size());
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t a, std::size_t b) { return r.scores[a] < r.scores[b]; });

  // Group runs of scores equal up to rounding, then order each group by the
  // objective vector and input index.
  constexpr double kRelTol = 1e-12;
  auto tie_less = [&](std::size_t a, std::size_t b) {
    const auto oa = candidates[a].as_array();
    const auto ob = candidates[b].as_array();
    if (oa != ob) return oa < ob;
    return a < b;
  };
  std::size_t begin = 0;
  while (begin < r.order.size()) {
    const double anchor = r.scores[r.order[begin]];
    const double tol = kRelTol * std::max(1.0, std::abs(anchor));
    std::size_t end = begin + 1;
    while (end < r.order.size() && r.scores[r.order[end]] - anchor <= tol) ++end;
    std::sort(r.order.begin() + static_cast<std::ptrdiff_t>(begin),
              r.order.begin() + static_cast<std::ptrdiff_t>(end), tie_less);
    begin = end;
  }
  return r;
}

}  // namespace cfx
