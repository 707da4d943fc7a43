// SPDX-License-Identifier: Apache-2.0
// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cfx/cli.hpp"
#include "cfx/metrics.hpp"
#include "cfx/nsga2.hpp"
#include "cfx/objectives.hpp"
#include "cfx/pipeline.hpp"
#include "cfx/rng.hpp"
#include "cfx/service.hpp"
#include "../support.hpp"

#include <httplib.h>

namespace {

using namespace cfx;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  std::size_t checked = 0, failures = 0;
  double worst = 0.0, worst_abs = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    for (double l1 : {0.0, 1e-3}) {
      const auto c = testing::five_node_case(seed);
      const auto r = testing::check_gradients(c.model, c.window, l1, 1e-5, 1e-4, 1e-6);
      checked += r.checked;
      failures += r.failures;
      worst = std::max(worst, r.worst_relative);
      worst_abs = std::max(worst_abs, r.worst_absolute);
    }
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && checked > 0 && secs < 10.0,
          std::to_string(checked) + " entries, " + std::to_string(failures) + " failures, worst abs " +
              fmt("%.2e", worst_abs) + ", worst rel above abs tol " + fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome metric_suite() {
  Eigen::MatrixXd truth(1, 3), pred(1, 3);
  truth << 1, 2, 3;
  pred << 2, 2, 2;
  const MetricsReport m = compute_metrics(truth, pred);
  // residuals (1, 0, -1); truth variance 2/3
  const double rmse = std::sqrt(2.0 / 3.0);
  const double mae = 2.0 / 3.0;
  const double acc = 1.0 - std::sqrt(2.0) / std::sqrt(14.0);
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9; };
  const bool hand = near(m.rmse, rmse) && near(m.mae, mae) && near(m.accuracy, acc) && m.r2 &&
                    near(*m.r2, 0.0) && m.var_explained && near(*m.var_explained, 0.0);
  const MetricsReport id = compute_metrics(truth, truth);
  const bool exact = id.rmse == 0.0 && id.mae == 0.0 && id.accuracy == 1.0 && id.r2 == 1.0 &&
                     id.var_explained == 1.0;
  return {hand && exact, "example " + json::parse(m.to_json()).dump() + ", identity " + json::parse(id.to_json()).dump()};
}

std::vector<std::set<std::size_t>> brute_fronts(const std::vector<nsga2::Objectives>& objs) {
  auto dominated_by = [](const nsga2::Objectives& a, const nsga2::Objectives& b) {
    bool strict = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (b[i] > a[i]) return false;
      strict = strict || b[i] < a[i];
    }
    return strict;
  };
  std::set<std::size_t> remaining;
  for (std::size_t i = 0; i < objs.size(); ++i) remaining.insert(i);
  std::vector<std::set<std::size_t>> fronts;
  while (!remaining.empty()) {
    std::set<std::size_t> front;
    for (std::size_t i : remaining) {
      bool dominated = false;
      for (std::size_t j : remaining) dominated = dominated || dominated_by(objs[i], objs[j]);
      if (!dominated) front.insert(i);
    }
    for (std::size_t i : front) remaining.erase(i);
    fronts.push_back(front);
  }
  return fronts;
}

Outcome nsga2_correctness() {
  Rng rng(2024);
  std::vector<nsga2::Objectives> objs(200);
  for (auto& o : objs) {
    for (int k = 0; k < 4; ++k) o.push_back(std::floor(rng.uniform(0.0, 6.0)));
  }
  const auto fronts = nsga2::fast_non_dominated_sort(objs);
  const auto expected = brute_fronts(objs);
  bool sort_ok = fronts.size() == expected.size();
  for (std::size_t f = 0; sort_ok && f < fronts.size(); ++f) {
    sort_ok = std::set<std::size_t>(fronts[f].begin(), fronts[f].end()) == expected[f];
  }

  nsga2::GeneSpace space;
  space.lower = {-10.0};
  space.upper = {10.0};
  space.mutation_std = {1.0};
  space.integer = {false};
  space.mutable_gene = {true};
  nsga2::EngineConfig cfg;
  cfg.population_size = 50;
  cfg.generations = 100;
  const auto t0 = Clock::now();
  const auto r = nsga2::evolve(std::vector<double>{7.0}, space, cfg, [](std::span<const double> x) {
    return nsga2::Objectives{x[0] * x[0], (x[0] - 2.0) * (x[0] - 2.0)};
  });
  const double secs = seconds_since(t0);
  double lo = 1e9, hi = -1e9;
  for (const auto& ind : r.pareto) {
    lo = std::min(lo, ind.genes[0]);
    hi = std::max(hi, ind.genes[0]);
  }
  const bool schaffer = !r.pareto.empty() && lo >= -0.05 && hi <= 2.05 && secs < 5.0;
  return {sort_ok && schaffer, std::to_string(expected.size()) + " fronts " + (sort_ok ? "match" : "differ") +
                                   "; front x in [" + fmt("%.4f", lo) + ", " + fmt("%.4f", hi) + "], " +
                                   std::to_string(r.pareto.size()) + " members, " + fmt("%.2f", secs) + " s"};
}

Outcome objective_arithmetic() {
  const double o1 = o1_validity(54.65, 56.0);
  const std::vector<double> x{1, 2, 3}, xp{1, 4, 2};
  const std::size_t o3 = o3_sparsity(x, xp);
  return {std::abs(o1 - 1.35) <= 0.005 && o3 == 2,
          "o1 = " + fmt("%.4f", o1) + ", o3 = " + std::to_string(o3)};
}

// Shared 30-node world for the end-to-end criteria.
struct World {
  testing::TempDir dir;
  RunDirectory run;
  TrainSummary training;
  std::vector<FrontDocument> fronts;
  double setup_seconds = 0.0;
};

struct FrontStats {
  double decreasing_poi = 0.0;  // fraction of candidates
  double mean_abs_lanes = 0.0;
};

FrontStats front_stats(const FrontDocument& f) {
  FrontStats s;
  for (const auto& c : f.candidates) {
    double poi = 0.0, lanes = 0.0;
    for (std::size_t pos = 0; pos < f.segment_ids.size(); ++pos) {
      const std::size_t g = pos * kFeaturesPerSegment;
      poi += c.genes[g] - f.original[g];
      lanes += std::abs(c.genes[g + 1] - f.original[g + 1]);
    }
    if (poi < 0.0) s.decreasing_poi += 1.0;
    s.mean_abs_lanes += lanes;
  }
  const auto n = static_cast<double>(f.candidates.size());
  s.decreasing_poi /= n;
  s.mean_abs_lanes /= n;
  return s;
}

SearchConfig scenario(const std::string& node, const std::string& window, double delta, std::uint64_t seed) {
  SearchConfig c;
  c.target_node = node;
  c.window_start = window;
  c.target_delta = delta;
  c.seed = seed;
  return c;
}

Outcome planted_effect_recovery(World& w) {
  const auto t0 = Clock::now();
  SyntheticCorpusSpec spec;
  spec.node_count = 30;
  spec.days = 14;
  spec.seed = 7;
  synth_run(w.run, spec);
  TrainOptions opts;
  opts.config.epochs = 80;
  w.training = train_run(w.run, opts);
  const double accuracy = w.training.metrics.accuracy;

  const Corpus corpus = load_run_corpus(w.run);
  const Checkpoint ckpt = load_run_model(w.run);
  const std::string node = "R0-S2";
  const double planted = spec.planted.at(corpus.graph.node_class[corpus.graph.require_index(node)]).poi_count;
  int direction_ok = 0, closed_ok = 0;
  std::string runs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RunDirectory out{w.run.root / ("c5_seed" + std::to_string(seed))};
    const ExplainResult r = explain_run(w.run, scenario(node, "2019-01-10T08:00:00", 10.0, seed), out);
    w.fronts.push_back(r.front);
    std::vector<ObjectiveVector> objs;
    for (const auto& c : r.front.candidates) objs.push_back(c.objectives);
    const FrontCandidate& best = r.front.candidates[rank_candidates(objs, EvaluationWeights{}).selected()];
    double poi = 0.0;
    for (std::size_t pos = 0; pos < r.front.segment_ids.size(); ++pos) {
      poi += best.genes[pos * kFeaturesPerSegment] - r.front.original[pos * kFeaturesPerSegment];
    }
    const double predicted = predict_target(r.problem, ckpt.model, best.genes);
    const double closed = (predicted - r.problem.original_prediction) /
                          (r.problem.target_speed - r.problem.original_prediction);
    if (poi != 0.0 && (poi > 0.0) == (planted > 0.0)) ++direction_ok;
    if (closed >= 0.8) ++closed_ok;
    runs += " [seed " + std::to_string(seed) + ": dPOI " + fmt("%+.0f", poi) + ", closed " +
            fmt("%.2f", closed) + "]";
  }
  w.setup_seconds = seconds_since(t0);
  const bool pass = accuracy >= 0.85 && direction_ok >= 4 && closed_ok >= 4 && w.setup_seconds < 600.0;
  return {pass, "accuracy " + fmt("%.3f", accuracy) + ", direction " + std::to_string(direction_ok) +
                    "/5, gap " + std::to_string(closed_ok) + "/5," + runs + ", " +
                    fmt("%.0f", w.setup_seconds) + " s"};
}

Outcome scenario_constraints(World& w) {
  if (!std::filesystem::exists(w.run.model())) return {false, "no trained model"};
  const SearchConfig base = scenario("R1-S2", "2019-01-10T08:00:00", 10.0, 1);
  SearchConfig directional = base;
  directional.constraints = {{ConstraintKind::directional, {std::string("poi_count")}, Direction::increase, 100.0}};
  SearchConfig weighting = base;
  weighting.constraints = {{ConstraintKind::weighting, {std::string("lane_count")}, Direction::increase, 100.0}};

  auto run = [&](const SearchConfig& c, const std::string& tag) {
    const ExplainResult r = explain_run(w.run, c, RunDirectory{w.run.root / ("c6_" + tag)});
    w.fronts.push_back(r.front);
    return front_stats(r.front);
  };
  const FrontStats b = run(base, "baseline");
  const FrontStats d = run(directional, "directional");
  const FrontStats l = run(weighting, "weighting");
  const double lane_drop = b.mean_abs_lanes > 0.0 ? 1.0 - l.mean_abs_lanes / b.mean_abs_lanes : 0.0;
  const bool dir_ok = d.decreasing_poi <= 0.10 && b.decreasing_poi >= 0.30;
  const bool lane_ok = lane_drop >= 0.50;
  return {dir_ok && lane_ok,
          "POI-decreasing share " + fmt("%.3f", b.decreasing_poi) + " baseline vs " +
              fmt("%.3f", d.decreasing_poi) + " directional (" + (dir_ok ? "ok" : "not met") +
              "); mean |dlanes| " + fmt("%.3f", b.mean_abs_lanes) + " -> " + fmt("%.3f", l.mean_abs_lanes) +
              ", drop " + fmt("%.0f%%", 100.0 * lane_drop) + " (" + (lane_ok ? "ok" : "not met") + ")"};
}

std::set<std::size_t> argmin_set(const std::vector<ObjectiveVector>& objs, const EvaluationWeights& w) {
  const Ranking r = rank_candidates(objs, w);
  const double best = r.scores[r.selected()];
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    if (std::abs(r.scores[i] - best) <= 1e-12 * std::max(1.0, std::abs(best))) out.insert(i);
  }
  return out;
}

Outcome ranking_invariance(const World& w) {
  std::vector<std::vector<ObjectiveVector>> fronts;
  for (const auto& f : w.fronts) {
    std::vector<ObjectiveVector> objs;
    for (const auto& c : f.candidates) objs.push_back(c.objectives);
    fronts.push_back(objs);
  }
  Rng rng(77);
  for (int k = 0; k < 40; ++k) {
    std::vector<ObjectiveVector> f;
    for (int i = 0; i < 30; ++i) {
      f.push_back({rng.uniform(0.0, 12.0), rng.uniform(0.0, 300.0), std::floor(rng.uniform(0.0, 18.0)),
                   rng.uniform(0.0, 40.0)});
    }
    fronts.push_back(f);
  }
  std::vector<EvaluationWeights> weights{EvaluationWeights{}};
  weights.push_back(EvaluationWeights{{1.0, 1.0, 1.0, 1.0}});
  for (int i = 0; i < 8; ++i) {
    weights.push_back(EvaluationWeights{{rng.uniform(0.01, 2.0), rng.uniform(0.01, 2.0), rng.uniform(0.01, 2.0),
                                         rng.uniform(0.01, 2.0)}});
  }
  std::size_t cases = 0, changed = 0;
  for (const auto& f : fronts) {
    for (const auto& base : weights) {
      const auto reference = argmin_set(f, base);
      for (double c : {0.1, 3.0, 100.0}) {
        EvaluationWeights scaled = base;
        for (double& l : scaled.lambda) l *= c;
        ++cases;
        if (argmin_set(f, scaled) != reference) ++changed;
      }
    }
  }
  return {changed == 0 && w.fronts.size() >= 8,
          std::to_string(cases) + " scaled cases over " + std::to_string(fronts.size()) + " fronts (" +
              std::to_string(w.fronts.size()) + " searched), " + std::to_string(changed) + " changed"};
}

Outcome determinism() {
  testing::TempDir a, b;
  SyntheticCorpusSpec spec;
  spec.node_count = 12;
  spec.days = 3;
  spec.seed = 5;
  TrainOptions opts;
  opts.config.epochs = 3;
  opts.config.hidden_dim = 8;
  opts.test_days = 1;
  SearchConfig search = scenario("R1-S2", "2019-01-02T08:00:00", 5.0, 9);
  search.population_size = 16;
  search.generations = 10;
  for (const auto* d : {&a, &b}) {
    synth_run(d->run(), spec);
    train_run(d->run(), opts);
    explain_run(d->run(), search, d->run());
  }
  std::vector<std::string> differing;
  auto same = [&](const std::filesystem::path& rel) {
    if (read_file(a.path() / rel) != read_file(b.path() / rel)) differing.push_back(rel.string());
  };
  for (const char* f : {"graph.json", "speeds.csv", "static.csv", "context.csv", "synth.json"}) {
    same(std::filesystem::path("corpus") / f);
  }
  same("model.json");
  same("front.json");
  same("front.csv");
  same("history.ndjson");
  std::string detail = "corpus, model.json, front.json, front.csv, history.ndjson";
  if (!differing.empty()) {
    detail = "differs:";
    for (const auto& d : differing) detail += " " + d;
  }
  return {differing.empty(), detail};
}

Outcome service_contract() {
  testing::TempDir dir;
  const RunDirectory run = dir.run();
  testing::install_small_world(run);
  const std::string golden_path = testing::golden("search_config.json").string();
  const std::string golden = read_file(golden_path);
  std::vector<std::string> problems;

  // CLI side
  const std::string cli_out = (dir.path() / "cli").string();
  std::ostringstream out, err;
  if (cli_dispatch({"explain", "--run-dir", run.root.string(), "--config", golden_path, "--out", cli_out}, out,
                   err) != 0) {
    problems.push_back("cli explain: " + err.str());
  } else if (read_file(RunDirectory{cli_out}.search()) != golden) {
    problems.push_back("cli search.json differs from golden");
  }

  // HTTP side, no UI assets
  ServiceOptions opts;
  opts.run = run;
  opts.port = 0;
  Service service(opts);
  httplib::Client client("127.0.0.1", service.start());
  client.set_read_timeout(120, 0);
  json bad = json::parse(golden);
  bad["feasible_ranges"]["lane_count"] = {6.0, 1.0};
  const auto rejected = client.Post("/jobs", bad.dump(), "application/json");
  if (!rejected || rejected->status != 400 ||
      json::parse(rejected->body).value("path", "") != "$.feasible_ranges.lane_count") {
    problems.push_back("invalid range not rejected with its path");
  }
  bad = json::parse(golden);
  bad["constraints"][0]["direction"] = "sideways";
  const auto rejected2 = client.Post("/jobs", bad.dump(), "application/json");
  if (!rejected2 || rejected2->status != 400 ||
      json::parse(rejected2->body).value("path", "") != "$.constraints[0].direction") {
    problems.push_back("invalid constraint not rejected with its path");
  }
  const auto created = client.Post("/jobs", golden, "application/json");
  if (!created || created->status != 201) {
    problems.push_back("golden config not accepted");
  } else {
    const std::string id = json::parse(created->body).at("id");
    service.jobs().wait_idle();
    const RunDirectory job = service.jobs().job_dir(id);
    if (service.jobs().get(id)->state != JobState::done) problems.push_back("job did not finish");
    if (read_file(job.search()) != golden) problems.push_back("http search.json differs from golden");
    if (read_file(job.front_json()) != read_file(RunDirectory{cli_out}.front_json())) {
      problems.push_back("http and cli fronts differ");
    }
    for (const std::string weights : {"1,0.2,0.2,0.6", "3,0.1,0.5,2"}) {
      const auto rank = client.Post("/jobs/" + id + "/rank", "{\"weights\":[" + weights + "]}", "application/json");
      std::ostringstream cli_rank, cli_err;
      cli_dispatch({"rank", "--run-dir", job.root.string(), "--weights", weights}, cli_rank, cli_err);
      if (!rank || rank->status != 200 || rank->body != cli_rank.str()) {
        problems.push_back("re-rank differs from cli rank for " + weights);
      }
    }
  }
  const auto ui = client.Get("/ui");
  if (!ui || ui->status != 404) problems.push_back("/ui should be absent");
  service.stop();

  std::string detail = "golden round-trip, 400 paths, rank parity, no UI";
  if (!problems.empty()) {
    detail.clear();
    for (const auto& p : problems) detail += (detail.empty() ? "" : "; ") + p;
  }
  return {problems.empty(), detail};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  World world;
  world.run = world.dir.run();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient oracle", gradient_oracle},
      {"metric suite", metric_suite},
      {"nsga2 correctness", nsga2_correctness},
      {"objective arithmetic", objective_arithmetic},
      {"planted effect recovery", [&] { return planted_effect_recovery(world); }},
      {"scenario constraints", [&] { return scenario_constraints(world); }},
      {"ranking invariance", [&] { return ranking_invariance(world); }},
      {"determinism", determinism},
      {"service contract", service_contract},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %zu %-24s %s  %s\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
