// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfx/timeutil.hpp"

namespace cfx {

enum class NodeClass { suburban, urban, highway };

std::string to_string(NodeClass c);
NodeClass node_class_from_string(const std::string& name);

/// Undirected road graph. Each road segment is a node.
struct RoadGraph {
  std::vector<std::string> node_ids;
  Eigen::MatrixXd adjacency;  // symmetric, {0,1}, zero diagonal
  std::vector<NodeClass> node_class;
  std::vector<int> road;  // road index per node (synthetic metadata)

  std::size_t node_count() const { return node_ids.size(); }
  std::optional<std::size_t> index_of(const std::string& id) const;
  std::size_t require_index(const std::string& id) const;
  std::vector<std::size_t> neighbors(std::size_t node) const;

  /// Throws InvalidInput when an invariant is violated.
  void validate() const;

  static RoadGraph from_edges(std::vector<std::string> ids,
                              const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                              std::vector<NodeClass> classes = {}, std::vector<int> roads = {});
};

struct StaticFeatures {
  int poi_count = 0;
  int lane_count = 1;
  double speed_limit = 50.0;  // km/h

  bool operator==(const StaticFeatures&) const = default;
};

struct WeatherRecord {
  double temperature = 15.0;    // deg C
  double wind_speed = 0.0;      // m/s
  double precipitation = 0.0;   // mm/h
  double humidity = 50.0;       // %
};

struct DynamicContext {
  std::array<double, 7> day_of_week{};  // one-hot, Monday = index 0
  double hour_sin = 0.0;
  double hour_cos = 1.0;
  WeatherRecord weather;
};

/// Encodes a timestamp and weather record. Throws InvalidInput on non-finite or
/// out-of-domain weather values.
DynamicContext encode_context(Timestamp ts, const WeatherRecord& weather);
int decode_day(const DynamicContext& ctx);
/// Fractional hour of day in [0, 24).
double decode_hour(const DynamicContext& ctx);

struct SpeedSeries {
  Eigen::MatrixXd values;  // node_count x time_steps, km/h
  int interval_minutes = 5;
  Timestamp start{};

  std::size_t node_count() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t time_steps() const { return static_cast<std::size_t>(values.cols()); }
  Timestamp timestamp(std::size_t step) const {
    return start + std::chrono::minutes(static_cast<long>(step) * interval_minutes);
  }
  std::size_t steps_per_day() const { return static_cast<std::size_t>(24 * 60 / interval_minutes); }
};

/// Column layout of the enhanced feature matrix X_t.
namespace feature {
inline constexpr std::size_t kSpeed = 0;
inline constexpr std::size_t kPoi = 1;
inline constexpr std::size_t kLanes = 2;
inline constexpr std::size_t kSpeedLimit = 3;
inline constexpr std::size_t kDayOfWeek = 4;  // 7 columns
inline constexpr std::size_t kHourSin = 11;
inline constexpr std::size_t kHourCos = 12;
inline constexpr std::size_t kTemperature = 13;
inline constexpr std::size_t kWind = 14;
inline constexpr std::size_t kPrecipitation = 15;
inline constexpr std::size_t kHumidity = 16;
inline constexpr std::size_t kDim = 17;

// Fixed input scales; the values stored in StaticFeatures stay in natural units.
inline constexpr double kPoiScale = 36.0;
inline constexpr double kLaneScale = 6.0;
inline constexpr double kSpeedLimitScale = 120.0;
inline constexpr double kTemperatureScale = 40.0;
inline constexpr double kWindScale = 20.0;
inline constexpr double kPrecipitationScale = 10.0;
inline constexpr double kHumidityScale = 100.0;
}  // namespace feature

/// Input groups that can be switched off for ablation runs.
enum class FeatureGroup {
  speed,
  poi,
  lanes,
  speed_limit,
  temperature,
  precipitation,
  wind,
  humidity,
  hour,
  day
};

std::string to_string(FeatureGroup g);
FeatureGroup feature_group_from_string(const std::string& name);
std::vector<FeatureGroup> all_feature_groups();
/// 0/1 mask over the kDim columns with the given groups enabled.
std::vector<double> input_mask(std::span<const FeatureGroup> enabled);

struct FeatureWindow {
  std::vector<Eigen::MatrixXd> inputs;  // window_length matrices of node_count x kDim
  Eigen::MatrixXd targets;              // horizon_length x node_count, km/h
  std::size_t start_step = 0;           // first input step in the series

  std::size_t window_length() const { return inputs.size(); }
  std::size_t horizon_length() const { return static_cast<std::size_t>(targets.rows()); }
  std::size_t node_count() const { return static_cast<std::size_t>(targets.cols()); }
};

struct WindowSpec {
  std::size_t window_length = 12;
  std::size_t horizon_length = 12;
  std::size_t stride = 1;
};

std::size_t window_count(std::size_t time_steps, const WindowSpec& spec);

/// Feature matrix for one time step (node_count x kDim); speeds are divided
/// by `speed_scale`.
Eigen::MatrixXd step_features(const SpeedSeries& speeds, std::span<const StaticFeatures> statics,
                              const DynamicContext& context, std::size_t step, double speed_scale);

/// Builds contiguous, non-wrapping windows. Throws RangeError when the series
/// is shorter than window_length + horizon_length.
std::vector<FeatureWindow> make_windows(const SpeedSeries& speeds,
                                        std::span<const StaticFeatures> statics,
                                        std::span<const DynamicContext> context,
                                        const WindowSpec& spec, double speed_scale);

/// Single window starting at `start_step`.
FeatureWindow window_at(const SpeedSeries& speeds, std::span<const StaticFeatures> statics,
                        std::span<const DynamicContext> context, std::size_t start_step,
                        const WindowSpec& spec, double speed_scale);

/// Overwrites the static columns of one node in every input step.
void patch_static(FeatureWindow& window, std::size_t node, const StaticFeatures& features);

}  // namespace cfx
