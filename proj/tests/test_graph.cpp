// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "cfx/corpus.hpp"
#include "cfx/error.hpp"
#include "cfx/forecaster.hpp"
#include "cfx/graph.hpp"
#include "cfx/run_dir.hpp"
#include "cfx/timeutil.hpp"
#include "support.hpp"

namespace cfx {
namespace {

TEST(Timeutil, RoundTrip) {
  const Timestamp ts = parse_timestamp("2019-01-07T06:35:00");
  EXPECT_EQ(format_timestamp(ts), "2019-01-07T06:35:00");
  EXPECT_EQ(weekday_index(ts), 0);
  EXPECT_EQ(hour_of_day(ts), 6);
  EXPECT_EQ(minute_of_hour(ts), 35);
  EXPECT_THROW(parse_timestamp("2019-01-07 06:35"), InvalidInput);
  EXPECT_THROW(parse_timestamp("2019-13-07T06:35:00"), InvalidInput);
}

TEST(Context, MidnightHourEncoding) {
  const DynamicContext c = encode_context(parse_timestamp("2019-01-02T00:00:00"), {});
  EXPECT_EQ(c.hour_sin, 0.0);
  EXPECT_EQ(c.hour_cos, 1.0);
}

TEST(Context, SixOClockHourEncoding) {
  const DynamicContext c = encode_context(parse_timestamp("2019-01-02T06:00:00"), {});
  EXPECT_NEAR(c.hour_sin, 1.0, 1e-12);
  EXPECT_NEAR(c.hour_cos, 0.0, 1e-12);
  EXPECT_NEAR(decode_hour(c), 6.0, 1e-9);
}

TEST(Context, MondayIsIndexZero) {
  const DynamicContext c = encode_context(parse_timestamp("2019-01-07T12:00:00"), {});
  const std::array<double, 7> expected{1, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(c.day_of_week, expected);
  EXPECT_EQ(decode_day(c), 0);
  EXPECT_EQ(decode_day(encode_context(parse_timestamp("2019-01-13T12:00:00"), {})), 6);
}

TEST(Context, RejectsNonFiniteWeather) {
  WeatherRecord w;
  w.temperature = std::nan("");
  EXPECT_THROW(encode_context(parse_timestamp("2019-01-07T12:00:00"), w), InvalidInput);
  WeatherRecord h;
  h.humidity = 140.0;
  EXPECT_THROW(encode_context(parse_timestamp("2019-01-07T12:00:00"), h), InvalidInput);
}

TEST(Windows, CountingFormula) {
  const WindowSpec spec{12, 12, 1};
  EXPECT_EQ(window_count(24, spec), 1u);
  EXPECT_EQ(window_count(25, spec), 2u);
  EXPECT_EQ(window_count(23, spec), 0u);
  EXPECT_EQ(window_count(100, WindowSpec{12, 12, 4}), 20u);
}

SpeedSeries ramp_series(std::size_t nodes, std::size_t steps) {
  SpeedSeries s;
  s.values.resize(static_cast<Eigen::Index>(nodes), static_cast<Eigen::Index>(steps));
  for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
    for (Eigen::Index t = 0; t < s.values.cols(); ++t) s.values(i, t) = 10.0 * i + t;
  }
  s.start = parse_timestamp("2019-01-01T00:00:00");
  return s;
}

std::vector<DynamicContext> contexts(const SpeedSeries& s) {
  std::vector<DynamicContext> out;
  for (std::size_t t = 0; t < s.time_steps(); ++t) out.push_back(encode_context(s.timestamp(t), {}));
  return out;
}

TEST(Windows, TooShortSeriesThrows) {
  const SpeedSeries s = ramp_series(2, 23);
  const std::vector<StaticFeatures> statics(2);
  EXPECT_THROW(make_windows(s, statics, contexts(s), WindowSpec{}, 100.0), RangeError);
}

TEST(Windows, ContentsAndLayout) {
  const SpeedSeries s = ramp_series(2, 25);
  std::vector<StaticFeatures> statics{{6, 2, 60.0}, {0, 3, 96.0}};
  const auto windows = make_windows(s, statics, contexts(s), WindowSpec{}, 100.0);
  ASSERT_EQ(windows.size(), 2u);
  const FeatureWindow& w = windows[1];
  EXPECT_EQ(w.start_step, 1u);
  ASSERT_EQ(w.window_length(), 12u);
  EXPECT_EQ(w.horizon_length(), 12u);
  EXPECT_EQ(w.inputs[0].rows(), 2);
  EXPECT_EQ(w.inputs[0].cols(), static_cast<Eigen::Index>(feature::kDim));
  EXPECT_DOUBLE_EQ(w.inputs[0](1, feature::kSpeed), 11.0 / 100.0);
  EXPECT_DOUBLE_EQ(w.inputs[0](0, feature::kPoi), 6.0 / 36.0);
  EXPECT_DOUBLE_EQ(w.inputs[0](1, feature::kLanes), 3.0 / 6.0);
  EXPECT_DOUBLE_EQ(w.inputs[0](1, feature::kSpeedLimit), 96.0 / 120.0);
  // Targets are the 12 steps following the inputs, in km/h.
  EXPECT_DOUBLE_EQ(w.targets(0, 0), 13.0);
  EXPECT_DOUBLE_EQ(w.targets(11, 1), 10.0 + 24.0);
}

TEST(Windows, PatchStaticOnlyTouchesOneNode) {
  const SpeedSeries s = ramp_series(2, 24);
  std::vector<StaticFeatures> statics{{6, 2, 60.0}, {0, 3, 96.0}};
  FeatureWindow w = window_at(s, statics, contexts(s), 0, WindowSpec{}, 100.0);
  const FeatureWindow before = w;
  patch_static(w, 1, StaticFeatures{12, 4, 72.0});
  for (std::size_t k = 0; k < w.window_length(); ++k) {
    EXPECT_EQ(w.inputs[k].row(0), before.inputs[k].row(0));
    EXPECT_DOUBLE_EQ(w.inputs[k](1, feature::kPoi), 12.0 / 36.0);
    EXPECT_DOUBLE_EQ(w.inputs[k](1, feature::kSpeed), before.inputs[k](1, feature::kSpeed));
  }
}

TEST(Graph, ValidationRejectsBadAdjacency) {
  RoadGraph g = RoadGraph::from_edges({"a", "b"}, {{0, 1}});
  EXPECT_NO_THROW(g.validate());
  g.adjacency(0, 0) = 1.0;
  EXPECT_THROW(g.validate(), InvalidInput);
  RoadGraph asym = RoadGraph::from_edges({"a", "b"}, {{0, 1}});
  asym.adjacency(1, 0) = 0.0;
  EXPECT_THROW(asym.validate(), InvalidInput);
  EXPECT_THROW(RoadGraph::from_edges({"a", "a"}, {}), InvalidInput);
}

TEST(Graph, Lookup) {
  const RoadGraph g = RoadGraph::from_edges({"a", "b", "c"}, {{0, 1}, {1, 2}});
  EXPECT_EQ(g.index_of("c"), std::optional<std::size_t>(2));
  EXPECT_FALSE(g.index_of("z").has_value());
  EXPECT_EQ(g.neighbors(1), (std::vector<std::size_t>{0, 2}));
}

TEST(Adjacency, IsolatedNode) {
  const auto a = normalize_adjacency(RoadGraph::from_edges({"a"}, {}));
  ASSERT_EQ(a.matrix.rows(), 1);
  EXPECT_DOUBLE_EQ(a.matrix(0, 0), 1.0);
}

TEST(Adjacency, TwoConnectedNodes) {
  const auto a = normalize_adjacency(RoadGraph::from_edges({"a", "b"}, {{0, 1}}));
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(a.matrix(i, j), 0.5);
  }
}

TEST(Adjacency, PathCentre) {
  const auto a = normalize_adjacency(RoadGraph::from_edges({"a", "b", "c"}, {{0, 1}, {1, 2}}));
  EXPECT_NEAR(a.matrix(1, 1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(a.matrix(0, 1), 1.0 / std::sqrt(6.0), 1e-15);
  EXPECT_DOUBLE_EQ(a.matrix(0, 2), 0.0);
}

TEST(Synth, ZeroEffectsNoNoiseMatchesClassCurve) {
  SyntheticCorpusSpec spec = SyntheticCorpusSpec::zero_effects();
  spec.noise_std = 0.0;
  spec.node_count = 18;
  spec.days = 2;
  const Corpus c = synth_generate(spec);
  for (std::size_t i = 0; i < c.graph.node_count(); ++i) {
    for (std::size_t t = 0; t < c.speeds.time_steps(); t += 7) {
      const double expected = round_sig9(class_base_speed(c.graph.node_class[i], c.speeds.timestamp(t)));
      ASSERT_EQ(c.speeds.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)), expected);
    }
  }
}

TEST(Synth, SameSpecIsBitIdentical) {
  SyntheticCorpusSpec spec;
  spec.node_count = 12;
  spec.days = 2;
  const Corpus a = synth_generate(spec);
  const Corpus b = synth_generate(spec);
  EXPECT_TRUE(a.speeds.values == b.speeds.values);
  EXPECT_EQ(a.statics, b.statics);
  EXPECT_TRUE(a.graph.adjacency == b.graph.adjacency);
  spec.seed += 1;
  EXPECT_FALSE(synth_generate(spec).speeds.values == a.speeds.values);
}

TEST(Synth, PoiEffectOnSuburbanNodes) {
  SyntheticCorpusSpec spec = SyntheticCorpusSpec::zero_effects();
  spec.planted[NodeClass::suburban].poi_count = 0.5;
  const Timestamp ts = parse_timestamp("2019-01-03T08:15:00");
  const StaticFeatures a{4, 2, 64.0};
  const StaticFeatures b{14, 2, 64.0};
  EXPECT_NEAR(planted_speed(spec, NodeClass::suburban, b, ts, {}) -
                  planted_speed(spec, NodeClass::suburban, a, ts, {}),
              5.0, 1e-12);
}

TEST(Synth, NoiseFreeSeriesFollowsPlantedCoefficients) {
  SyntheticCorpusSpec spec;
  spec.noise_std = 0.0;
  spec.node_count = 30;
  spec.days = 1;
  const Corpus c = synth_generate(spec);
  // Two nodes of the same class share base curve and weather, so their gap is
  // the planted linear combination of their static differences.
  const double coef[3][3] = {{0.5, 2.0, 0.2}, {-0.4, 1.0, 0.15}, {-0.2, 1.5, 0.25}};
  for (std::size_t i = 0; i < c.graph.node_count(); ++i) {
    for (std::size_t j = i + 1; j < c.graph.node_count(); ++j) {
      if (c.graph.node_class[i] != c.graph.node_class[j]) continue;
      const auto* k = coef[static_cast<int>(c.graph.node_class[i])];
      const StaticFeatures& a = c.statics[i];
      const StaticFeatures& b = c.statics[j];
      const double expected = k[0] * (a.poi_count - b.poi_count) +
                              k[1] * (a.lane_count - b.lane_count) +
                              k[2] * (a.speed_limit - b.speed_limit);
      for (Eigen::Index t = 0; t < c.speeds.values.cols(); t += 11) {
        const double gap = c.speeds.values(static_cast<Eigen::Index>(i), t) -
                           c.speeds.values(static_cast<Eigen::Index>(j), t);
        ASSERT_NEAR(gap, expected, 1e-6) << i << " vs " << j << " at " << t;
      }
    }
  }
}

TEST(Synth, RejectsBadSpec) {
  SyntheticCorpusSpec spec;
  spec.node_count = 0;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = {};
  spec.noise_std = -1.0;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Corpus, SaveLoadRoundTrip) {
  testing::TempDir dir;
  SyntheticCorpusSpec spec;
  spec.node_count = 12;
  spec.days = 2;
  const Corpus c = synth_generate(spec);
  save_corpus(c, dir.path() / "corpus");
  const Corpus back = load_corpus(dir.path() / "corpus");
  EXPECT_EQ(back.graph.node_ids, c.graph.node_ids);
  EXPECT_TRUE(back.graph.adjacency == c.graph.adjacency);
  EXPECT_EQ(back.graph.node_class, c.graph.node_class);
  EXPECT_EQ(back.statics, c.statics);
  EXPECT_TRUE(back.speeds.values == c.speeds.values);
  ASSERT_EQ(back.context.size(), c.context.size());
  for (std::size_t t = 0; t < c.context.size(); t += 13) {
    EXPECT_EQ(back.context[t].day_of_week, c.context[t].day_of_week);
    EXPECT_NEAR(back.context[t].weather.precipitation, c.context[t].weather.precipitation, 1e-8);
    EXPECT_NEAR(back.context[t].weather.humidity, c.context[t].weather.humidity, 1e-6);
  }
  // Saving the loaded corpus reproduces the same bytes.
  save_corpus(back, dir.path() / "again");
  for (const char* f : {"graph.json", "speeds.csv", "static.csv", "context.csv"}) {
    EXPECT_EQ(read_file(dir.path() / "corpus" / f), read_file(dir.path() / "again" / f)) << f;
  }
}

TEST(Corpus, MissingDirectoryThrows) {
  EXPECT_THROW(load_corpus("/nonexistent/cfx/corpus"), Error);
}

}  // namespace
}  // namespace cfx
