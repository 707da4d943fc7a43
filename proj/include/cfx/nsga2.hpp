// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "cfx/rng.hpp"

namespace cfx::nsga2 {

using Objectives = std::vector<double>;

/// a dominates b: no worse everywhere and strictly better somewhere (minimisation).
bool dominates(std::span<const double> a, std::span<const double> b);

/// Fronts of indices into `objectives`; front 0 is the non-dominated set.
std::vector<std::vector<std::size_t>> fast_non_dominated_sort(
    std::span<const Objectives> objectives);

/// Crowding distance for each member of `front` (indices into `objectives`).
/// Boundary members per objective get +inf; objectives with max == min are
/// skipped; fronts of two or fewer members are all +inf.
std::vector<double> crowding_distance(std::span<const Objectives> objectives,
                                      std::span<const std::size_t> front);

/// Per-gene bounds and mutation settings.
struct GeneSpace {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> mutation_std;
  std::vector<bool> integer;
  std::vector<bool> mutable_gene;
  /// Gene sets forced equal; the first member is the representative.
  std::vector<std::vector<std::size_t>> tied_groups;

  std::size_t size() const { return lower.size(); }
  /// Throws ConfigError on inconsistent sizes, lower > upper, non-positive
  /// std on a mutable gene, or a tied group mixing mutability or bounds.
  void validate() const;
  /// Ranges, integrality and tied-group equality.
  bool feasible(std::span<const double> genes) const;
  /// Genes not changed by mutation or crossover: immutable genes, checked
  /// against the original.
  bool respects_mask(std::span<const double> genes, std::span<const double> original) const;

  /// Units of variation: each ungrouped gene alone, each tied group as one unit.
  std::vector<std::vector<std::size_t>> units() const;
};

/// Each mutable unit is perturbed with probability `mutation_prob` by
/// N(0, std^2), clamped, then rounded for integer genes, and broadcast across
/// its tied group.
std::vector<double> gaussian_mutate(std::span<const double> genes, const GeneSpace& space,
                                    double mutation_prob, Rng& rng);

/// Each unit is swapped between the parents with probability 0.5.
std::pair<std::vector<double>, std::vector<double>> uniform_crossover(
    std::span<const double> parent_a, std::span<const double> parent_b, const GeneSpace& space,
    Rng& rng);

struct Individual {
  std::vector<double> genes;
  Objectives objectives;
  std::size_t rank = 0;
  double crowding = 0.0;
};

struct EngineConfig {
  std::size_t population_size = 64;
  std::size_t generations = 100;
  double mutation_prob = 0.3;
  double crossover_prob = 0.7;
  std::uint64_t seed = 1;
  std::size_t initial_mutation_rounds = 3;
};

using Evaluator = std::function<Objectives(std::span<const double>)>;

struct GenerationRecord {
  std::size_t generation = 0;
  std::vector<Individual> population;
};

struct EvolveHooks {
  std::function<void(const GenerationRecord&)> on_generation;
  std::function<bool()> should_stop;
};

struct EvolveResult {
  std::vector<Individual> population;
  std::vector<Individual> pareto;
  std::vector<GenerationRecord> history;
  std::size_t evaluations = 0;  // distinct gene vectors evaluated
  bool cancelled = false;
};

/// Elitist NSGA-II starting from `original` and its mutants. The random
/// stream is consumed only in selection, crossover and mutation; evaluation
/// is a pure function of the genes and is memoised on exact gene bytes.
EvolveResult evolve(std::span<const double> original, const GeneSpace& space,
                    const EngineConfig& config, const Evaluator& evaluate,
                    const EvolveHooks& hooks = {});

/// Rank-0 members, deduplicated on exact gene equality (first kept).
std::vector<Individual> extract_pareto(std::span<const Individual> population);

}  // namespace cfx::nsga2
