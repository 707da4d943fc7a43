// SPDX-License-Identifier: Apache-2.0
#include "cfx/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cfx/error.hpp"
#include "cfx/rng.hpp"
#include "cfx/run_dir.hpp"

namespace cfx {

using nlohmann::json;

std::map<NodeClass, PlantedEffects> SyntheticCorpusSpec::default_effects() {
  // Suburban roads gain speed with more POIs, urban roads lose it.
  return {
      {NodeClass::suburban, {0.5, 2.0, 0.2, -1.5}},
      {NodeClass::urban, {-0.4, 1.0, 0.15, -2.0}},
      {NodeClass::highway, {-0.2, 1.5, 0.25, -1.0}},
  };
}

SyntheticCorpusSpec SyntheticCorpusSpec::zero_effects() {
  SyntheticCorpusSpec spec;
  for (auto& [cls, effects] : spec.planted) effects = PlantedEffects{};
  spec.noise_std = 0.0;
  return spec;
}

void SyntheticCorpusSpec::validate() const {
  if (node_count == 0) throw ConfigError("$.node_count", "must be positive");
  if (days == 0) throw ConfigError("$.days", "must be positive");
  if (segments_per_road == 0) throw ConfigError("$.segments_per_road", "must be positive");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw ConfigError("$.noise_std", "must be a finite non-negative number");
  }
  try {
    (void)parse_timestamp(start);
  } catch (const InvalidInput& e) {
    throw ConfigError("$.start", e.what());
  }
}

double Corpus::speed_scale() const {
  const double m = speeds.values.size() ? speeds.values.maxCoeff() : 0.0;
  return m > 0.0 ? m : 1.0;
}

namespace {

struct ClassProfile {
  double free_flow;
  double daily_dip;
  double weekend_factor;
};

ClassProfile profile(NodeClass c) {
  switch (c) {
    case NodeClass::suburban: return {30.0, 14.0, 0.5};
    case NodeClass::urban: return {40.0, 12.0, 0.6};
    case NodeClass::highway: return {55.0, 18.0, 0.4};
  }
  return {30.0, 14.0, 0.5};
}

NodeClass road_class(std::size_t road) {
  static constexpr NodeClass kPattern[] = {NodeClass::suburban, NodeClass::urban,
                                           NodeClass::highway,  NodeClass::suburban,
                                           NodeClass::suburban, NodeClass::urban};
  return kPattern[road % std::size(kPattern)];
}

int draw_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo + 1)));
}

StaticFeatures draw_segment(Rng& rng, NodeClass c, double road_speed_limit) {
  StaticFeatures s;
  s.speed_limit = road_speed_limit;
  switch (c) {
    case NodeClass::suburban:
      s.poi_count = draw_int(rng, 0, 36);
      s.lane_count = draw_int(rng, 1, 3);
      break;
    case NodeClass::urban:
      s.poi_count = draw_int(rng, 0, 36);
      s.lane_count = draw_int(rng, 2, 4);
      break;
    case NodeClass::highway:
      s.poi_count = draw_int(rng, 0, 36);
      s.lane_count = draw_int(rng, 3, 6);
      break;
  }
  return s;
}

double draw_road_limit(Rng& rng, NodeClass c) {
  static const std::vector<double> kSuburban{56, 64, 72, 80, 88};
  static const std::vector<double> kUrban{40, 48, 56};
  static const std::vector<double> kHighway{96, 104, 112, 120};
  const auto& options =
      c == NodeClass::suburban ? kSuburban : (c == NodeClass::urban ? kUrban : kHighway);
  return options[rng.index(options.size())];
}

std::vector<WeatherRecord> draw_weather(Rng& rng, std::size_t days, std::size_t steps_per_day) {
  std::vector<WeatherRecord> out;
  out.reserve(days * steps_per_day);
  double wind_state = 0.0;
  for (std::size_t d = 0; d < days; ++d) {
    const double day_offset = rng.gaussian(0.0, 2.0);
    const bool rains = rng.bernoulli(0.3);
    const std::size_t rain_start = rng.index(steps_per_day);
    const std::size_t rain_len = steps_per_day / 24 * (1 + rng.index(5));
    const double rain_rate = rng.uniform(0.5, 6.0);
    for (std::size_t s = 0; s < steps_per_day; ++s) {
      const double hour = 24.0 * static_cast<double>(s) / static_cast<double>(steps_per_day);
      WeatherRecord w;
      w.temperature = 12.0 + 6.0 * std::sin(2.0 * std::numbers::pi * (hour - 9.0) / 24.0) +
                      day_offset;
      wind_state = 0.98 * wind_state + rng.gaussian(0.0, 0.3);
      w.wind_speed = std::max(0.0, 3.0 + wind_state);
      const bool raining = rains && s >= rain_start && s < rain_start + rain_len;
      w.precipitation = raining ? rain_rate : 0.0;
      w.humidity = std::clamp(
          60.0 + 15.0 * std::cos(2.0 * std::numbers::pi * hour / 24.0) + (raining ? 25.0 : 0.0),
          0.0, 100.0);
      w.temperature = round_sig9(w.temperature);
      w.wind_speed = round_sig9(w.wind_speed);
      w.precipitation = round_sig9(w.precipitation);
      w.humidity = round_sig9(w.humidity);
      out.push_back(w);
    }
  }
  return out;
}

}  // namespace

double class_base_speed(NodeClass c, Timestamp ts) {
  const ClassProfile p = profile(c);
  const double hour = hour_of_day(ts) + minute_of_hour(ts) / 60.0;
  const bool weekend = weekday_index(ts) >= 5;
  const double modulation = weekend ? p.weekend_factor : 1.0;
  return p.free_flow -
         p.daily_dip * modulation * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * hour / 24.0));
}

double planted_speed(const SyntheticCorpusSpec& spec, NodeClass c, const StaticFeatures& f,
                     Timestamp ts, const WeatherRecord& weather) {
  const auto it = spec.planted.find(c);
  const PlantedEffects e = it == spec.planted.end() ? PlantedEffects{} : it->second;
  return class_base_speed(c, ts) + e.poi_count * f.poi_count + e.lane_count * f.lane_count +
         e.speed_limit * f.speed_limit + e.precipitation * weather.precipitation;
}

double round_sig9(double v) { return std::strtod(format_sig9(v).c_str(), nullptr); }

std::string format_sig9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

Corpus synth_generate(const SyntheticCorpusSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Corpus corpus;
  corpus.spec = spec;

  // Topology: one chain per road plus cross-links between roads.
  const std::size_t n = spec.node_count;
  const std::size_t per_road = spec.segments_per_road;
  const std::size_t roads = (n + per_road - 1) / per_road;
  std::vector<std::string> ids;
  std::vector<NodeClass> classes;
  std::vector<int> road_of;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = i / per_road;
    const std::size_t seg = i % per_road;
    ids.push_back("R" + std::to_string(r) + "-S" + std::to_string(seg));
    classes.push_back(road_class(r));
    road_of.push_back(static_cast<int>(r));
    if (seg > 0) edges.emplace_back(i - 1, i);
  }
  // Each road's last segment links to a random segment of another road.
  for (std::size_t r = 0; roads > 1 && r < roads; ++r) {
    const std::size_t from = std::min(n - 1, r * per_road + per_road - 1);
    std::size_t other = rng.index(roads - 1);
    if (other >= r) ++other;
    const std::size_t first = other * per_road;
    const std::size_t len = std::min(per_road, n - first);
    edges.emplace_back(from, first + rng.index(len));
  }
  corpus.graph = RoadGraph::from_edges(std::move(ids), edges, std::move(classes), road_of);

  std::vector<double> road_limits(roads);
  for (std::size_t r = 0; r < roads; ++r) road_limits[r] = draw_road_limit(rng, road_class(r));
  corpus.statics.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    corpus.statics.push_back(
        draw_segment(rng, corpus.graph.node_class[i], road_limits[i / per_road]));
  }

  SpeedSeries& series = corpus.speeds;
  series.interval_minutes = 5;
  series.start = parse_timestamp(spec.start);
  const std::size_t steps_per_day = series.steps_per_day();
  const std::size_t steps = spec.days * steps_per_day;
  const auto weather = draw_weather(rng, spec.days, steps_per_day);

  corpus.context.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    corpus.context.push_back(encode_context(series.timestamp(t), weather[t]));
  }

  series.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(steps));
  for (std::size_t t = 0; t < steps; ++t) {
    const Timestamp ts = series.timestamp(t);
    for (std::size_t i = 0; i < n; ++i) {
      double v = planted_speed(spec, corpus.graph.node_class[i], corpus.statics[i], ts, weather[t]);
      if (spec.noise_std > 0.0) v += rng.gaussian(0.0, spec.noise_std);
      series.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) =
          round_sig9(std::max(0.0, v));
    }
  }
  return corpus;
}

namespace {

json spec_to_json(const SyntheticCorpusSpec& spec) {
  json planted = json::object();
  for (const auto& [cls, e] : spec.planted) {
    planted[to_string(cls)] = {{"poi_count", e.poi_count},
                               {"lane_count", e.lane_count},
                               {"speed_limit", e.speed_limit},
                               {"precipitation", e.precipitation}};
  }
  return {{"schema_version", 1},
          {"seed", spec.seed},
          {"node_count", spec.node_count},
          {"days", spec.days},
          {"segments_per_road", spec.segments_per_road},
          {"noise_std", spec.noise_std},
          {"start", spec.start},
          {"planted_coefficients", planted}};
}

SyntheticCorpusSpec spec_from_json(const json& j) {
  SyntheticCorpusSpec spec;
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.node_count = j.at("node_count").get<std::size_t>();
  spec.days = j.at("days").get<std::size_t>();
  spec.segments_per_road = j.at("segments_per_road").get<std::size_t>();
  spec.noise_std = j.at("noise_std").get<double>();
  spec.start = j.at("start").get<std::string>();
  spec.planted.clear();
  for (const auto& [name, e] : j.at("planted_coefficients").items()) {
    spec.planted[node_class_from_string(name)] = {
        e.at("poi_count").get<double>(), e.at("lane_count").get<double>(),
        e.at("speed_limit").get<double>(), e.at("precipitation").get<double>()};
  }
  return spec;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw InvalidInput("malformed number '" + s + "'");
  return v;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split_csv(line));
  }
  return rows;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const RoadGraph& g = corpus.graph;

  json nodes = json::array();
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    json neighbors = json::array();
    for (auto j : g.neighbors(i)) neighbors.push_back(g.node_ids[j]);
    nodes.push_back({{"id", g.node_ids[i]},
                     {"class", to_string(g.node_class[i])},
                     {"road", g.road.empty() ? 0 : g.road[i]},
                     {"neighbors", neighbors}});
  }
  json graph_doc = {{"schema_version", 1}, {"nodes", nodes}};
  write_file_atomic(dir / "graph.json", graph_doc.dump(2) + "\n");

  std::ostringstream speeds;
  speeds << "timestamp";
  for (const auto& id : g.node_ids) speeds << ',' << id;
  speeds << '\n';
  for (std::size_t t = 0; t < corpus.speeds.time_steps(); ++t) {
    speeds << format_timestamp(corpus.speeds.timestamp(t));
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      speeds << ','
             << format_sig9(corpus.speeds.values(static_cast<Eigen::Index>(i),
                                                 static_cast<Eigen::Index>(t)));
    }
    speeds << '\n';
  }
  write_file_atomic(dir / "speeds.csv", speeds.str());

  std::ostringstream statics;
  statics << "node_id,poi_count,lane_count,speed_limit\n";
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const auto& s = corpus.statics[i];
    statics << g.node_ids[i] << ',' << s.poi_count << ',' << s.lane_count << ','
            << format_sig9(s.speed_limit) << '\n';
  }
  write_file_atomic(dir / "static.csv", statics.str());

  std::ostringstream ctx;
  ctx << "timestamp,dow_mon,dow_tue,dow_wed,dow_thu,dow_fri,dow_sat,dow_sun,hour_sin,hour_cos,"
         "temperature,wind_speed,precipitation,humidity\n";
  for (std::size_t t = 0; t < corpus.context.size(); ++t) {
    const auto& c = corpus.context[t];
    ctx << format_timestamp(corpus.speeds.timestamp(t));
    for (double d : c.day_of_week) ctx << ',' << format_sig9(d);
    ctx << ',' << format_sig9(c.hour_sin) << ',' << format_sig9(c.hour_cos) << ','
        << format_sig9(c.weather.temperature) << ',' << format_sig9(c.weather.wind_speed) << ','
        << format_sig9(c.weather.precipitation) << ',' << format_sig9(c.weather.humidity) << '\n';
  }
  write_file_atomic(dir / "context.csv", ctx.str());

  if (corpus.spec) write_file_atomic(dir / "synth.json", spec_to_json(*corpus.spec).dump(2) + "\n");
}

Corpus load_corpus(const std::filesystem::path& dir) {
  Corpus corpus;
  const json graph_doc = json::parse(read_file(dir / "graph.json"));
  std::vector<std::string> ids;
  std::vector<NodeClass> classes;
  std::vector<int> roads;
  for (const auto& node : graph_doc.at("nodes")) {
    ids.push_back(node.at("id").get<std::string>());
    classes.push_back(node_class_from_string(node.at("class").get<std::string>()));
    roads.push_back(node.value("road", 0));
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (const auto& nb : graph_doc.at("nodes")[i].at("neighbors")) {
      const auto it = index.find(nb.get<std::string>());
      if (it == index.end()) throw InvalidInput("graph.json references unknown neighbor");
      edges.emplace_back(i, it->second);
    }
  }
  corpus.graph = RoadGraph::from_edges(ids, edges, classes, roads);
  const std::size_t n = ids.size();

  const auto speed_rows = read_csv(dir / "speeds.csv");
  if (speed_rows.size() < 2) throw InvalidInput("speeds.csv has no data rows");
  const auto& header = speed_rows.front();
  if (header.size() != n + 1) throw InvalidInput("speeds.csv column count mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (header[i + 1] != ids[i]) throw InvalidInput("speeds.csv column order mismatch");
  }
  const std::size_t steps = speed_rows.size() - 1;
  corpus.speeds.interval_minutes = 5;
  corpus.speeds.start = parse_timestamp(speed_rows[1][0]);
  corpus.speeds.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(steps));
  for (std::size_t t = 0; t < steps; ++t) {
    const auto& row = speed_rows[t + 1];
    if (row.size() != n + 1) throw InvalidInput("speeds.csv ragged row");
    for (std::size_t i = 0; i < n; ++i) {
      const double v = to_double(row[i + 1]);
      if (v < 0.0) throw InvalidInput("negative speed in speeds.csv");
      corpus.speeds.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = v;
    }
  }

  const auto static_rows = read_csv(dir / "static.csv");
  corpus.statics.assign(n, StaticFeatures{});
  for (std::size_t r = 1; r < static_rows.size(); ++r) {
    const auto& row = static_rows[r];
    if (row.size() != 4) throw InvalidInput("static.csv malformed row");
    const auto it = index.find(row[0]);
    if (it == index.end()) throw InvalidInput("static.csv references unknown node");
    corpus.statics[it->second] = {static_cast<int>(to_double(row[1])),
                                  static_cast<int>(to_double(row[2])), to_double(row[3])};
  }

  const auto ctx_rows = read_csv(dir / "context.csv");
  if (ctx_rows.size() != steps + 1) throw InvalidInput("context.csv length mismatch");
  corpus.context.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto& row = ctx_rows[t + 1];
    if (row.size() != 14) throw InvalidInput("context.csv malformed row");
    WeatherRecord w{to_double(row[10]), to_double(row[11]), to_double(row[12]),
                    to_double(row[13])};
    corpus.context.push_back(encode_context(parse_timestamp(row[0]), w));
  }

  if (std::filesystem::exists(dir / "synth.json")) {
    corpus.spec = spec_from_json(json::parse(read_file(dir / "synth.json")));
  }
  return corpus;
}

}  // namespace cfx
