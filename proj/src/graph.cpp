// SPDX-License-Identifier: Apache-2.0
#include "cfx/graph.hpp"

#include <cmath>
#include <numbers>
#include <unordered_set>

#include "cfx/error.hpp"

namespace cfx {

std::string to_string(NodeClass c) {
  switch (c) {
    case NodeClass::suburban: return "suburban";
    case NodeClass::urban: return "urban";
    case NodeClass::highway: return "highway";
  }
  return "suburban";
}

NodeClass node_class_from_string(const std::string& name) {
  if (name == "suburban") return NodeClass::suburban;
  if (name == "urban") return NodeClass::urban;
  if (name == "highway") return NodeClass::highway;
  throw InvalidInput("unknown node class '" + name + "'");
}

std::optional<std::size_t> RoadGraph::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < node_ids.size(); ++i) {
    if (node_ids[i] == id) return i;
  }
  return std::nullopt;
}

std::size_t RoadGraph::require_index(const std::string& id) const {
  auto idx = index_of(id);
  if (!idx) throw NotFound("unknown node '" + id + "'");
  return *idx;
}

std::vector<std::size_t> RoadGraph::neighbors(std::size_t node) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < node_count(); ++j) {
    if (adjacency(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(j)) != 0.0) {
      out.push_back(j);
    }
  }
  return out;
}

void RoadGraph::validate() const {
  const auto n = static_cast<Eigen::Index>(node_ids.size());
  if (n == 0) throw InvalidInput("graph has no nodes");
  if (adjacency.rows() != n || adjacency.cols() != n) {
    throw InvalidInput("adjacency shape does not match node count");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : node_ids) {
    if (!seen.insert(id).second) throw InvalidInput("duplicate node id '" + id + "'");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) throw InvalidInput("adjacency has a non-zero diagonal");
    for (Eigen::Index j = 0; j < n; ++j) {
      const double a = adjacency(i, j);
      if (a != 0.0 && a != 1.0) throw InvalidInput("adjacency entries must be 0 or 1");
      if (a != adjacency(j, i)) throw InvalidInput("adjacency is not symmetric");
    }
  }
  if (!node_class.empty() && node_class.size() != node_ids.size()) {
    throw InvalidInput("node_class length mismatch");
  }
}

RoadGraph RoadGraph::from_edges(std::vector<std::string> ids,
                                const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                std::vector<NodeClass> classes, std::vector<int> roads) {
  RoadGraph g;
  const auto n = static_cast<Eigen::Index>(ids.size());
  g.node_ids = std::move(ids);
  g.adjacency = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [a, b] : edges) {
    if (a == b) continue;
    if (static_cast<Eigen::Index>(a) >= n || static_cast<Eigen::Index>(b) >= n) {
      throw InvalidInput("edge references unknown node");
    }
    g.adjacency(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = 1.0;
    g.adjacency(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = 1.0;
  }
  if (classes.empty()) classes.assign(g.node_ids.size(), NodeClass::suburban);
  if (roads.empty()) roads.assign(g.node_ids.size(), 0);
  g.node_class = std::move(classes);
  g.road = std::move(roads);
  g.validate();
  return g;
}

DynamicContext encode_context(Timestamp ts, const WeatherRecord& weather) {
  const double values[] = {weather.temperature, weather.wind_speed, weather.precipitation,
                           weather.humidity};
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidInput("non-finite weather value");
  }
  if (weather.precipitation < 0.0) throw InvalidInput("precipitation must be non-negative");
  if (weather.humidity < 0.0 || weather.humidity > 100.0) {
    throw InvalidInput("humidity must lie in [0, 100]");
  }
  DynamicContext ctx;
  ctx.day_of_week[static_cast<std::size_t>(weekday_index(ts))] = 1.0;
  const double hour = hour_of_day(ts) + minute_of_hour(ts) / 60.0;
  const double angle = 2.0 * std::numbers::pi * hour / 24.0;
  ctx.hour_sin = std::sin(angle);
  ctx.hour_cos = std::cos(angle);
  ctx.weather = weather;
  return ctx;
}

int decode_day(const DynamicContext& ctx) {
  for (std::size_t i = 0; i < ctx.day_of_week.size(); ++i) {
    if (ctx.day_of_week[i] == 1.0) return static_cast<int>(i);
  }
  throw InvalidInput("day_of_week is not one-hot");
}

double decode_hour(const DynamicContext& ctx) {
  double angle = std::atan2(ctx.hour_sin, ctx.hour_cos);
  if (angle < 0.0) angle += 2.0 * std::numbers::pi;
  double hour = angle * 24.0 / (2.0 * std::numbers::pi);
  if (hour >= 24.0) hour -= 24.0;
  return hour;
}

std::string to_string(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::speed: return "speed";
    case FeatureGroup::poi: return "poi";
    case FeatureGroup::lanes: return "lanes";
    case FeatureGroup::speed_limit: return "speed_limit";
    case FeatureGroup::temperature: return "temperature";
    case FeatureGroup::precipitation: return "precipitation";
    case FeatureGroup::wind: return "wind";
    case FeatureGroup::humidity: return "humidity";
    case FeatureGroup::hour: return "hour";
    case FeatureGroup::day: return "day";
  }
  return "speed";
}

std::vector<FeatureGroup> all_feature_groups() {
  return {FeatureGroup::speed,       FeatureGroup::poi,         FeatureGroup::lanes,
          FeatureGroup::speed_limit, FeatureGroup::temperature, FeatureGroup::precipitation,
          FeatureGroup::wind,        FeatureGroup::humidity,    FeatureGroup::hour,
          FeatureGroup::day};
}

FeatureGroup feature_group_from_string(const std::string& name) {
  for (auto g : all_feature_groups()) {
    if (to_string(g) == name) return g;
  }
  throw InvalidInput("unknown feature group '" + name + "'");
}

std::vector<double> input_mask(std::span<const FeatureGroup> enabled) {
  std::vector<double> mask(feature::kDim, 0.0);
  for (auto g : enabled) {
    switch (g) {
      case FeatureGroup::speed: mask[feature::kSpeed] = 1.0; break;
      case FeatureGroup::poi: mask[feature::kPoi] = 1.0; break;
      case FeatureGroup::lanes: mask[feature::kLanes] = 1.0; break;
      case FeatureGroup::speed_limit: mask[feature::kSpeedLimit] = 1.0; break;
      case FeatureGroup::temperature: mask[feature::kTemperature] = 1.0; break;
      case FeatureGroup::precipitation: mask[feature::kPrecipitation] = 1.0; break;
      case FeatureGroup::wind: mask[feature::kWind] = 1.0; break;
      case FeatureGroup::humidity: mask[feature::kHumidity] = 1.0; break;
      case FeatureGroup::hour:
        mask[feature::kHourSin] = 1.0;
        mask[feature::kHourCos] = 1.0;
        break;
      case FeatureGroup::day:
        for (std::size_t i = 0; i < 7; ++i) mask[feature::kDayOfWeek + i] = 1.0;
        break;
    }
  }
  return mask;
}

std::size_t window_count(std::size_t time_steps, const WindowSpec& spec) {
  const std::size_t span = spec.window_length + spec.horizon_length;
  if (spec.stride == 0 || time_steps < span) return 0;
  return (time_steps - span) / spec.stride + 1;
}

namespace {

void write_static(Eigen::MatrixXd& m, Eigen::Index row, const StaticFeatures& s) {
  m(row, static_cast<Eigen::Index>(feature::kPoi)) = s.poi_count / feature::kPoiScale;
  m(row, static_cast<Eigen::Index>(feature::kLanes)) = s.lane_count / feature::kLaneScale;
  m(row, static_cast<Eigen::Index>(feature::kSpeedLimit)) =
      s.speed_limit / feature::kSpeedLimitScale;
}

void check_inputs(const SpeedSeries& speeds, std::span<const StaticFeatures> statics,
                  std::span<const DynamicContext> context) {
  if (statics.size() != speeds.node_count()) {
    throw DimensionError("static feature count does not match node count");
  }
  if (context.size() != speeds.time_steps()) {
    throw DimensionError("context length does not match series length");
  }
}

}  // namespace

Eigen::MatrixXd step_features(const SpeedSeries& speeds, std::span<const StaticFeatures> statics,
                              const DynamicContext& ctx, std::size_t step, double speed_scale) {
  const auto n = static_cast<Eigen::Index>(speeds.node_count());
  Eigen::MatrixXd m(n, static_cast<Eigen::Index>(feature::kDim));
  const auto col = static_cast<Eigen::Index>(step);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, static_cast<Eigen::Index>(feature::kSpeed)) = speeds.values(i, col) / speed_scale;
    write_static(m, i, statics[static_cast<std::size_t>(i)]);
    for (std::size_t d = 0; d < 7; ++d) {
      m(i, static_cast<Eigen::Index>(feature::kDayOfWeek + d)) = ctx.day_of_week[d];
    }
    m(i, static_cast<Eigen::Index>(feature::kHourSin)) = ctx.hour_sin;
    m(i, static_cast<Eigen::Index>(feature::kHourCos)) = ctx.hour_cos;
    m(i, static_cast<Eigen::Index>(feature::kTemperature)) =
        ctx.weather.temperature / feature::kTemperatureScale;
    m(i, static_cast<Eigen::Index>(feature::kWind)) = ctx.weather.wind_speed / feature::kWindScale;
    m(i, static_cast<Eigen::Index>(feature::kPrecipitation)) =
        ctx.weather.precipitation / feature::kPrecipitationScale;
    m(i, static_cast<Eigen::Index>(feature::kHumidity)) =
        ctx.weather.humidity / feature::kHumidityScale;
  }
  return m;
}

FeatureWindow window_at(const SpeedSeries& speeds, std::span<const StaticFeatures> statics,
                        std::span<const DynamicContext> context, std::size_t start_step,
                        const WindowSpec& spec, double speed_scale) {
  check_inputs(speeds, statics, context);
  if (start_step + spec.window_length + spec.horizon_length > speeds.time_steps()) {
    throw RangeError("window extends past the end of the series");
  }
  FeatureWindow w;
  w.start_step = start_step;
  w.inputs.reserve(spec.window_length);
  for (std::size_t t = 0; t < spec.window_length; ++t) {
    w.inputs.push_back(step_features(speeds, statics, context[start_step + t], start_step + t,
                                     speed_scale));
  }
  w.targets = speeds.values
                  .middleCols(static_cast<Eigen::Index>(start_step + spec.window_length),
                              static_cast<Eigen::Index>(spec.horizon_length))
                  .transpose();
  return w;
}

std::vector<FeatureWindow> make_windows(const SpeedSeries& speeds,
                                        std::span<const StaticFeatures> statics,
                                        std::span<const DynamicContext> context,
                                        const WindowSpec& spec, double speed_scale) {
  check_inputs(speeds, statics, context);
  const std::size_t count = window_count(speeds.time_steps(), spec);
  if (count == 0) {
    throw RangeError("series of " + std::to_string(speeds.time_steps()) +
                     " steps is too short for window " + std::to_string(spec.window_length) +
                     " + horizon " + std::to_string(spec.horizon_length));
  }
  // Each step's feature matrix is built once and copied into every window that uses it.
  std::vector<Eigen::MatrixXd> steps(speeds.time_steps());
  std::vector<bool> built(speeds.time_steps(), false);
  std::vector<FeatureWindow> out;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t start = w * spec.stride;
    FeatureWindow win;
    win.start_step = start;
    for (std::size_t t = start; t < start + spec.window_length; ++t) {
      if (!built[t]) {
        steps[t] = step_features(speeds, statics, context[t], t, speed_scale);
        built[t] = true;
      }
      win.inputs.push_back(steps[t]);
    }
    win.targets = speeds.values
                      .middleCols(static_cast<Eigen::Index>(start + spec.window_length),
                                  static_cast<Eigen::Index>(spec.horizon_length))
                      .transpose();
    out.push_back(std::move(win));
  }
  return out;
}

void patch_static(FeatureWindow& window, std::size_t node, const StaticFeatures& features) {
  for (auto& step : window.inputs) {
    write_static(step, static_cast<Eigen::Index>(node), features);
  }
}

}  // namespace cfx
