// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "cfx/error.hpp"
#include "cfx/impact.hpp"
#include "cfx/pipeline.hpp"
#include "cfx/rng.hpp"
#include "support.hpp"

namespace cfx {
namespace {

using nlohmann::json;

TEST(DayPrediction, UnchangedStaticsGiveIdenticalSeries) {
  const auto& w = testing::small_world();
  const std::size_t node = *w.corpus.graph.index_of("R1-S2");
  const DaySeries s = counterfactual_day_prediction(w.model, w.corpus, w.corpus.statics, 1, node);
  ASSERT_EQ(s.original.size(), 288u - 24u + 1u);
  EXPECT_EQ(s.counterfactual, s.original);
  EXPECT_EQ(s.timestamps.front(), "2019-01-02T01:00:00");
  EXPECT_EQ(s.timestamps.back(), "2019-01-02T23:00:00");
  // truth: horizon mean of the observed series
  const std::size_t first = 288 + 12;
  for (std::size_t w_i : {std::size_t{0}, std::size_t{100}, s.truth.size() - 1}) {
    double sum = 0.0;
    for (std::size_t k = 0; k < 12; ++k) {
      sum += w.corpus.speeds.values(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(first + w_i + k));
    }
    EXPECT_NEAR(s.truth[w_i], sum / 12.0, 1e-9);
  }

  const ImpactReport r = network_impact(w.model, w.corpus, w.corpus.statics, 1, node);
  for (const auto& n : r.nodes) {
    EXPECT_EQ(n.max_increase, 0.0);
    EXPECT_EQ(n.max_decrease, 0.0);
    EXPECT_EQ(n.mean_delta, 0.0);
  }
  EXPECT_TRUE(r.diff.empty());
  EXPECT_EQ(r.date, "2019-01-02");
}

TEST(DayPrediction, DayOutsideCorpus) {
  const auto& w = testing::small_world();
  EXPECT_THROW(counterfactual_day_prediction(w.model, w.corpus, w.corpus.statics, 4, 0), RangeError);
  EXPECT_THROW(counterfactual_day_prediction(w.model, w.corpus, w.corpus.statics, 0, 99), NotFound);
  std::vector<StaticFeatures> short_statics(3);
  EXPECT_THROW(counterfactual_day_prediction(w.model, w.corpus, short_statics, 0, 0), DimensionError);
}

TEST(NetworkImpact, DisconnectedComponentIsUntouched) {
  const auto& w = testing::small_world();
  Corpus corpus = w.corpus;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i + 1 < 6; ++i) {
    edges.emplace_back(i, i + 1);
    edges.emplace_back(6 + i, 6 + i + 1);
  }
  corpus.graph = RoadGraph::from_edges(corpus.graph.node_ids, edges, corpus.graph.node_class,
                                       corpus.graph.road);
  TgcnModel model = init_model(corpus.graph, ModelShape{feature::kDim, 8, 8, 12}, corpus.speed_scale(), 21);
  Rng rng(4);
  auto& bias = model.params.readout.bias;
  for (Eigen::Index i = 0; i < bias.size(); ++i) bias(i) = rng.uniform(20.0, 60.0) / model.speed_scale;

  std::vector<StaticFeatures> cf = corpus.statics;
  const std::size_t target = *corpus.graph.index_of("R1-S2");
  cf[target].poi_count += 9;
  cf[target + 1].lane_count += 2;
  const ImpactReport r = network_impact(model, corpus, cf, 2, target);
  double touched = 0.0;
  for (std::size_t n = 0; n < 12; ++n) {
    const NodeImpact& ni = r.nodes[n];
    if (corpus.graph.road[n] == corpus.graph.road[target]) {
      touched = std::max(touched, std::max(std::abs(ni.max_increase), std::abs(ni.max_decrease)));
    } else {
      EXPECT_EQ(ni.max_increase, 0.0) << ni.node;
      EXPECT_EQ(ni.max_decrease, 0.0) << ni.node;
    }
  }
  EXPECT_GT(touched, 0.0);
  const auto worst = std::min_element(r.nodes.begin(), r.nodes.end(), [](const auto& a, const auto& b) {
    return a.max_decrease < b.max_decrease;
  });
  EXPECT_EQ(r.worst.node, worst->node);
  EXPECT_EQ(r.worst.max_decrease, worst->max_decrease);
  ASSERT_EQ(r.diff.size(), 2u);
  EXPECT_EQ(r.total_poi, 9.0);
  EXPECT_EQ(r.total_lanes, 2.0);
  EXPECT_EQ(r.total_speed_limit, 0.0);
}

TEST(NetworkImpact, DiffCsvTotals) {
  ImpactReport r;
  r.diff.push_back({"a", {3, 2, 60.0}, {5, 1, 60.0}});
  r.diff.push_back({"b", {0, 1, 50.0}, {4, 1, 55.5}});
  r.total_poi = 6;
  r.total_lanes = -1;
  r.total_speed_limit = 5.5;
  EXPECT_EQ(diff_to_csv(r),
            "# schema_version: 1\n"
            "node_id,poi_count_original,poi_count_counterfactual,poi_count_delta,"
            "lane_count_original,lane_count_counterfactual,lane_count_delta,"
            "speed_limit_original,speed_limit_counterfactual,speed_limit_delta\n"
            "a,3,5,2,2,1,-1,60,60,0\n"
            "b,0,4,4,1,1,0,50,55.5,5.5\n"
            "total,,,6,,,-1,,,5.5\n");
}

TEST(Spearman, HandCases) {
  const std::vector<double> x{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(spearman(x, std::vector<double>{10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, std::vector<double>{4, 3, 2, 1}), -1.0);
  // ranks of y: 1.5 1.5 3.5 3.5
  EXPECT_NEAR(spearman(x, std::vector<double>{1, 1, 2, 2}), 4.0 / std::sqrt(20.0), 1e-15);
  EXPECT_TRUE(std::isnan(spearman(x, std::vector<double>{2, 2, 2, 2})));
  EXPECT_TRUE(std::isnan(spearman(std::vector<double>{1}, std::vector<double>{1})));
  EXPECT_THROW(spearman(x, std::vector<double>{1, 2}), DimensionError);
}

TEST(Spearman, MatchesRankDifferenceFormulaWithoutTies) {
  Rng rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 5 + static_cast<std::size_t>(rep) * 3;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(0.0, 1.0);
      y[i] = x[i] * (rep % 2 ? 1.0 : -1.0) + rng.uniform(0.0, 1.0);
    }
    auto rank_of = [](const std::vector<double>& v, std::size_t i) {
      return static_cast<double>(std::count_if(v.begin(), v.end(), [&](double o) { return o < v[i]; }) + 1);
    };
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) d2 += std::pow(rank_of(x, i) - rank_of(y, i), 2);
    const double nn = static_cast<double>(n);
    EXPECT_NEAR(spearman(x, y), 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0)), 1e-12);
  }
}

TEST(Distribution, RoundTripsThroughCsv) {
  FrontDocument doc;
  doc.candidates.push_back({0, {}, {0.1, 2.0, 3.0, 0.5}});
  doc.candidates.push_back({1, {}, {1.0 / 3.0, 0.0, 1.0, 1.25}});
  const std::string csv = export_objective_distribution(doc, EvaluationWeights{});
  const auto rows = read_objective_distribution(csv);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].objectives.validity, 1.0 / 3.0);
  // maxima (1/3, 2, 3, 1.25); weights 1, 0.2, 0.2, 0.6
  EXPECT_NEAR(rows[0].score, 0.3 + 0.2 + 0.2 + 0.6 * 0.4, 1e-12);
  EXPECT_NEAR(rows[1].score, 1.0 + 0.0 + 0.2 / 3.0 + 0.6, 1e-12);
  EXPECT_THROW(read_objective_distribution("a,b\n1,2\n"), InvalidInput);
  EXPECT_THROW(read_objective_distribution("candidate,validity,proximity,sparsity,plausibility,score\n1,x,0,0,0,0\n"),
               InvalidInput);
}

TEST(ImpactRun, WritesArtifactsForTheSelectedCandidate) {
  testing::TempDir dir;
  const RunDirectory run = dir.run();
  testing::install_small_world(run);
  const SearchConfig c = parse_search_config(read_file(testing::golden("search_config.json")));
  const ExplainResult res = explain_run(run, c, run);

  const auto rows = read_objective_distribution(read_file(run.front_csv()));
  EXPECT_EQ(rows.size(), res.front.candidates.size());
  const FrontDocument front = load_front(run);
  EXPECT_EQ(front_to_json(front), front_to_json(res.front));

  const ImpactReport r = impact_run(run, run, std::nullopt, std::nullopt);
  const json rank = json::parse(rank_run(run, c.weights));
  EXPECT_EQ(r.candidate, rank.at("selected").get<std::size_t>());
  EXPECT_EQ(r.day, 1u);
  EXPECT_EQ(r.target_node, "R1-S2");
  EXPECT_EQ(read_file(run.diff()), diff_to_csv(r));
  const json doc = json::parse(read_file(run.impact()));
  EXPECT_EQ(doc.at("unit"), "km/h");
  EXPECT_EQ(doc.at("target_series").at("original").size(), 265u);
  for (const auto& d : r.diff) {
    EXPECT_TRUE(std::find(c.editable_nodes.begin(), c.editable_nodes.end(), d.node) != c.editable_nodes.end());
  }
  EXPECT_THROW(impact_run(run, run, std::size_t{999}, std::nullopt), NotFound);
  EXPECT_THROW(impact_run(run, run, std::nullopt, std::size_t{9}), RangeError);
}

}  // namespace
}  // namespace cfx
