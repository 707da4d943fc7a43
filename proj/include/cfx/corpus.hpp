// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cfx/graph.hpp"

namespace cfx {

/// Signed linear effect sizes (km/h per unit) planted for one node class.
struct PlantedEffects {
  double poi_count = 0.0;
  double lane_count = 0.0;
  double speed_limit = 0.0;
  double precipitation = 0.0;  // km/h per mm/h
};

struct SyntheticCorpusSpec {
  std::uint64_t seed = 7;
  std::size_t node_count = 30;
  std::size_t days = 14;
  std::size_t segments_per_road = 6;
  std::map<NodeClass, PlantedEffects> planted = default_effects();
  double noise_std = 2.0;
  std::string start = "2019-01-01T00:00:00";

  static std::map<NodeClass, PlantedEffects> default_effects();
  static SyntheticCorpusSpec zero_effects();

  /// Throws ConfigError on zero nodes, zero days or bad fields.
  void validate() const;
};

struct Corpus {
  RoadGraph graph;
  SpeedSeries speeds;
  std::vector<StaticFeatures> statics;
  std::vector<DynamicContext> context;
  std::optional<SyntheticCorpusSpec> spec;  // present for generated corpora

  std::size_t days() const { return speeds.time_steps() / speeds.steps_per_day(); }
  /// Corpus-wide maximum speed, the normalisation constant for model input.
  double speed_scale() const;
};

/// Noise-free class curve: daily sinusoid with weekday/weekend modulation.
double class_base_speed(NodeClass c, Timestamp ts);

/// Noise-free generating function of the synthetic corpus (before clamping at 0).
double planted_speed(const SyntheticCorpusSpec& spec, NodeClass c, const StaticFeatures& features,
                     Timestamp ts, const WeatherRecord& weather);

Corpus synth_generate(const SyntheticCorpusSpec& spec);

/// Rounds to 9 significant digits, the precision used in all corpus files.
double round_sig9(double v);
std::string format_sig9(double v);

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

}  // namespace cfx
