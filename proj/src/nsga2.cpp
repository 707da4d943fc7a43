// SPDX-License-Identifier: Apache-2.0
#include "cfx/nsga2.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>
#include <unordered_map>

#include "cfx/error.hpp"

namespace cfx::nsga2 {

bool dominates(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("objective vectors differ in arity");
  bool strictly_better = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strictly_better = true;
  }
  return strictly_better;
}

std::vector<std::vector<std::size_t>> fast_non_dominated_sort(
    std::span<const Objectives> objectives) {
  const std::size_t n = objectives.size();
  std::vector<std::vector<std::size_t>> dominated_by_me(n);
  std::vector<std::size_t> domination_count(n, 0);
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<std::size_t> current;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      if (dominates(objectives[p], objectives[q])) {
        dominated_by_me[p].push_back(q);
        ++domination_count[q];
      } else if (dominates(objectives[q], objectives[p])) {
        dominated_by_me[q].push_back(p);
        ++domination_count[p];
      }
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (domination_count[p] == 0) current.push_back(p);
  }
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t p : current) {
      for (std::size_t q : dominated_by_me[p]) {
        if (--domination_count[q] == 0) next.push_back(q);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(std::span<const Objectives> objectives,
                                      std::span<const std::size_t> front) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t size = front.size();
  std::vector<double> distance(size, 0.0);
  if (size <= 2) {
    std::fill(distance.begin(), distance.end(), kInf);
    return distance;
  }
  const std::size_t arity = objectives[front[0]].size();
  std::vector<std::size_t> order(size);
  for (std::size_t m = 0; m < arity; ++m) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return objectives[front[a]][m] < objectives[front[b]][m];
    });
    const double lo = objectives[front[order.front()]][m];
    const double hi = objectives[front[order.back()]][m];
    if (!(hi > lo)) continue;
    distance[order.front()] = kInf;
    distance[order.back()] = kInf;
    for (std::size_t i = 1; i + 1 < size; ++i) {
      const double span = objectives[front[order[i + 1]]][m] - objectives[front[order[i - 1]]][m];
      distance[order[i]] += span / (hi - lo);
    }
  }
  return distance;
}

void GeneSpace::validate() const {
  const std::size_t n = lower.size();
  if (upper.size() != n || mutation_std.size() != n || integer.size() != n ||
      mutable_gene.size() != n) {
    throw ConfigError("$.gene_space", "per-gene arrays differ in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::string path = "$.gene_space[" + std::to_string(i) + "]";
    if (!(lower[i] <= upper[i])) throw ConfigError(path + ".range", "lower bound exceeds upper");
    if (mutable_gene[i] && !(mutation_std[i] > 0.0)) {
      throw ConfigError(path + ".mutation_std", "must be positive for a mutable gene");
    }
  }
  std::vector<bool> seen(n, false);
  for (std::size_t g = 0; g < tied_groups.size(); ++g) {
    const auto& group = tied_groups[g];
    const std::string path = "$.tied_groups[" + std::to_string(g) + "]";
    if (group.empty()) throw ConfigError(path, "empty tied group");
    for (std::size_t idx : group) {
      if (idx >= n) throw ConfigError(path, "gene index out of range");
      if (seen[idx]) throw ConfigError(path, "gene belongs to more than one tied group");
      seen[idx] = true;
      const std::size_t rep = group.front();
      if (mutable_gene[idx] != mutable_gene[rep] || lower[idx] != lower[rep] ||
          upper[idx] != upper[rep] || integer[idx] != integer[rep]) {
        throw ConfigError(path, "tied genes must share bounds, type and mutability");
      }
    }
  }
}

bool GeneSpace::feasible(std::span<const double> genes) const {
  if (genes.size() != size()) return false;
  for (std::size_t i = 0; i < genes.size(); ++i) {
    if (!(genes[i] >= lower[i] && genes[i] <= upper[i])) return false;
    if (integer[i] && genes[i] != std::round(genes[i])) return false;
  }
  for (const auto& group : tied_groups) {
    for (std::size_t idx : group) {
      if (genes[idx] != genes[group.front()]) return false;
    }
  }
  return true;
}

bool GeneSpace::respects_mask(std::span<const double> genes,
                              std::span<const double> original) const {
  for (std::size_t i = 0; i < genes.size(); ++i) {
    if (!mutable_gene[i] && genes[i] != original[i]) return false;
  }
  return true;
}

std::vector<std::vector<std::size_t>> GeneSpace::units() const {
  std::vector<bool> grouped(size(), false);
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> group_at(size(), SIZE_MAX);
  for (std::size_t g = 0; g < tied_groups.size(); ++g) {
    for (std::size_t idx : tied_groups[g]) {
      grouped[idx] = true;
      group_at[idx] = g;
    }
  }
  // Units appear in order of their lowest gene index.
  std::vector<bool> emitted(tied_groups.size(), false);
  for (std::size_t i = 0; i < size(); ++i) {
    if (!grouped[i]) {
      out.push_back({i});
    } else if (!emitted[group_at[i]]) {
      emitted[group_at[i]] = true;
      out.push_back(tied_groups[group_at[i]]);
    }
  }
  return out;
}

std::vector<double> gaussian_mutate(std::span<const double> genes, const GeneSpace& space,
                                    double mutation_prob, Rng& rng) {
  std::vector<double> out(genes.begin(), genes.end());
  for (const auto& unit : space.units()) {
    const std::size_t rep = unit.front();
    if (!space.mutable_gene[rep]) continue;
    if (!rng.bernoulli(mutation_prob)) continue;
    double v = out[rep] + rng.gaussian(0.0, space.mutation_std[rep]);
    v = std::clamp(v, space.lower[rep], space.upper[rep]);
    if (space.integer[rep]) {
      v = std::round(v);
      v = std::clamp(v, std::ceil(space.lower[rep]), std::floor(space.upper[rep]));
    }
    for (std::size_t idx : unit) out[idx] = v;
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> uniform_crossover(
    std::span<const double> parent_a, std::span<const double> parent_b, const GeneSpace& space,
    Rng& rng) {
  if (parent_a.size() != parent_b.size()) throw DimensionError("parents differ in length");
  std::vector<double> a(parent_a.begin(), parent_a.end());
  std::vector<double> b(parent_b.begin(), parent_b.end());
  for (const auto& unit : space.units()) {
    if (!rng.bernoulli(0.5)) continue;
    for (std::size_t idx : unit) std::swap(a[idx], b[idx]);
  }
  return {std::move(a), std::move(b)};
}

namespace {

std::string gene_key(std::span<const double> genes) {
  std::string key(genes.size() * sizeof(double), '\0');
  std::memcpy(key.data(), genes.data(), key.size());
  return key;
}

// Environmental selection over `pool`: assigns rank and crowding and returns
// the survivors, best fronts first.
std::vector<Individual> select_survivors(std::vector<Individual> pool, std::size_t target) {
  std::vector<Objectives> objs;
  objs.reserve(pool.size());
  for (const auto& ind : pool) objs.push_back(ind.objectives);
  const auto fronts = fast_non_dominated_sort(objs);
  std::vector<Individual> survivors;
  survivors.reserve(target);
  for (std::size_t r = 0; r < fronts.size() && survivors.size() < target; ++r) {
    const auto& front = fronts[r];
    const auto crowd = crowding_distance(objs, front);
    for (std::size_t i = 0; i < front.size(); ++i) {
      pool[front[i]].rank = r;
      pool[front[i]].crowding = crowd[i];
    }
    if (survivors.size() + front.size() <= target) {
      for (std::size_t idx : front) survivors.push_back(pool[idx]);
      continue;
    }
    std::vector<std::size_t> order(front.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return crowd[a] > crowd[b]; });
    for (std::size_t i = 0; survivors.size() < target; ++i) {
      survivors.push_back(pool[front[order[i]]]);
    }
  }
  return survivors;
}

const Individual& tournament(const std::vector<Individual>& pop, Rng& rng) {
  const Individual& a = pop[rng.index(pop.size())];
  const Individual& b = pop[rng.index(pop.size())];
  if (b.rank < a.rank) return b;
  if (b.rank == a.rank && b.crowding > a.crowding) return b;
  return a;
}

}  // namespace

EvolveResult evolve(std::span<const double> original, const GeneSpace& space,
                    const EngineConfig& config, const Evaluator& evaluate,
                    const EvolveHooks& hooks) {
  space.validate();
  if (config.population_size < 2) throw ConfigError("$.population_size", "must be at least 2");
  if (config.generations == 0) throw ConfigError("$.generations", "must be positive");
  if (!(config.mutation_prob >= 0.0 && config.mutation_prob <= 1.0)) {
    throw ConfigError("$.mutation_prob", "must lie in [0, 1]");
  }
  if (!(config.crossover_prob >= 0.0 && config.crossover_prob <= 1.0)) {
    throw ConfigError("$.crossover_prob", "must lie in [0, 1]");
  }
  if (original.size() != space.size()) throw DimensionError("original does not match gene space");
  if (!space.feasible(original)) throw ConfigError("$.original", "original genes are infeasible");

  Rng rng(config.seed);
  std::unordered_map<std::string, Objectives> memo;
  EvolveResult result;
  auto score = [&](Individual& ind) {
    auto key = gene_key(ind.genes);
    auto it = memo.find(key);
    if (it == memo.end()) {
      it = memo.emplace(std::move(key), evaluate(ind.genes)).first;
      ++result.evaluations;
    }
    ind.objectives = it->second;
  };

  std::vector<Individual> population;
  population.reserve(config.population_size);
  population.push_back({std::vector<double>(original.begin(), original.end()), {}, 0, 0.0});
  while (population.size() < config.population_size) {
    std::vector<double> genes(original.begin(), original.end());
    for (std::size_t r = 0; r < config.initial_mutation_rounds; ++r) {
      genes = gaussian_mutate(genes, space, config.mutation_prob, rng);
    }
    population.push_back({std::move(genes), {}, 0, 0.0});
  }
  for (auto& ind : population) score(ind);
  population = select_survivors(std::move(population), config.population_size);

  for (std::size_t gen = 1; gen <= config.generations; ++gen) {
    if (hooks.should_stop && hooks.should_stop()) {
      result.cancelled = true;
      break;
    }
    std::vector<Individual> offspring;
    offspring.reserve(config.population_size);
    while (offspring.size() < config.population_size) {
      const Individual& pa = tournament(population, rng);
      const Individual& pb = tournament(population, rng);
      std::vector<double> ca = pa.genes;
      std::vector<double> cb = pb.genes;
      if (rng.bernoulli(config.crossover_prob)) {
        std::tie(ca, cb) = uniform_crossover(pa.genes, pb.genes, space, rng);
      }
      ca = gaussian_mutate(ca, space, config.mutation_prob, rng);
      cb = gaussian_mutate(cb, space, config.mutation_prob, rng);
      offspring.push_back({std::move(ca), {}, 0, 0.0});
      if (offspring.size() < config.population_size) offspring.push_back({std::move(cb), {}, 0, 0.0});
    }
    for (auto& ind : offspring) score(ind);

    // Parents first so ties between identical genes keep the incumbent.
    std::vector<Individual> pool;
    pool.reserve(2 * config.population_size);
    std::unordered_map<std::string, bool> seen;
    std::vector<Individual> duplicates;
    for (auto* group : {&population, &offspring}) {
      for (auto& ind : *group) {
        if (seen.emplace(gene_key(ind.genes), true).second) {
          pool.push_back(std::move(ind));
        } else {
          duplicates.push_back(std::move(ind));
        }
      }
    }
    // Duplicates only refill the population when too few distinct vectors exist.
    for (std::size_t i = 0; pool.size() < config.population_size && i < duplicates.size(); ++i) {
      pool.push_back(std::move(duplicates[i]));
    }
    population = select_survivors(std::move(pool), config.population_size);

    GenerationRecord record{gen, population};
    if (hooks.on_generation) hooks.on_generation(record);
    result.history.push_back(std::move(record));
  }
  result.pareto = extract_pareto(population);
  result.population = std::move(population);
  return result;
}

std::vector<Individual> extract_pareto(std::span<const Individual> population) {
  std::vector<Objectives> objs;
  objs.reserve(population.size());
  for (const auto& ind : population) objs.push_back(ind.objectives);
  std::vector<Individual> out;
  if (population.empty()) return out;
  const auto fronts = fast_non_dominated_sort(objs);
  std::unordered_map<std::string, bool> seen;
  for (std::size_t idx : fronts.front()) {
    if (seen.emplace(gene_key(population[idx].genes), true).second) {
      Individual ind = population[idx];
      ind.rank = 0;
      out.push_back(std::move(ind));
    }
  }
  const auto crowd = [&] {
    std::vector<Objectives> front_objs;
    for (const auto& ind : out) front_objs.push_back(ind.objectives);
    std::vector<std::size_t> idx(out.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return crowding_distance(front_objs, idx);
  }();
  for (std::size_t i = 0; i < out.size(); ++i) out[i].crowding = crowd[i];
  return out;
}

}  // namespace cfx::nsga2
