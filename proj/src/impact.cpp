// SPDX-License-Identifier: Apache-2.0
#include "cfx/impact.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "cfx/error.hpp"
#include "cfx/timeutil.hpp"

namespace cfx {

using nlohmann::json;

namespace {

constexpr const char* kSchemaLine = "# schema_version: 1\n";

struct DayPredictions {
  std::vector<std::size_t> steps;  // first forecast step per window
  Eigen::MatrixXd original;        // windows x nodes
  Eigen::MatrixXd counterfactual;
  Eigen::MatrixXd truth;
};

DayPredictions predict_day(const TgcnModel& model, const Corpus& corpus,
                           std::span<const StaticFeatures> counterfactual, std::size_t day) {
  if (counterfactual.size() != corpus.graph.node_count()) {
    throw DimensionError("counterfactual statics do not cover every node");
  }
  const std::size_t per_day = corpus.speeds.steps_per_day();
  if (day >= corpus.days()) {
    throw RangeError("day " + std::to_string(day) + " is outside the corpus (" +
                     std::to_string(corpus.days()) + " days)");
  }
  const WindowSpec spec{model.window_length, model.horizon_length, 1};
  const std::size_t span = spec.window_length + spec.horizon_length;
  if (per_day < span) throw RangeError("a day is shorter than one window");
  const std::size_t first = day * per_day;
  const std::size_t count = per_day - span + 1;
  const auto n = static_cast<Eigen::Index>(corpus.graph.node_count());

  DayPredictions out;
  out.original.resize(static_cast<Eigen::Index>(count), n);
  out.counterfactual.resize(static_cast<Eigen::Index>(count), n);
  out.truth.resize(static_cast<Eigen::Index>(count), n);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t start = first + w;
    const auto row = static_cast<Eigen::Index>(w);
    FeatureWindow window = window_at(corpus.speeds, corpus.statics, corpus.context, start, spec,
                                     model.speed_scale);
    out.original.row(row) = model_forward(model, window).colwise().mean();
    out.truth.row(row) = window.targets.colwise().mean();
    for (std::size_t node = 0; node < counterfactual.size(); ++node) {
      if (!(counterfactual[node] == corpus.statics[node])) {
        patch_static(window, node, counterfactual[node]);
      }
    }
    out.counterfactual.row(row) = model_forward(model, window).colwise().mean();
    out.steps.push_back(start + spec.window_length);
  }
  return out;
}

std::vector<double> column(const Eigen::MatrixXd& m, std::size_t node) {
  const Eigen::VectorXd c = m.col(static_cast<Eigen::Index>(node));
  return {c.data(), c.data() + c.size()};
}

DaySeries series_for(const DayPredictions& p, const Corpus& corpus, std::size_t node) {
  DaySeries s;
  for (std::size_t step : p.steps) s.timestamps.push_back(format_timestamp(corpus.speeds.timestamp(step)));
  s.original = column(p.original, node);
  s.counterfactual = column(p.counterfactual, node);
  s.truth = column(p.truth, node);
  return s;
}

json static_json(const StaticFeatures& s) {
  return {{"poi_count", s.poi_count}, {"lane_count", s.lane_count}, {"speed_limit", s.speed_limit}};
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

DaySeries counterfactual_day_prediction(const TgcnModel& model, const Corpus& corpus,
                                        std::span<const StaticFeatures> counterfactual,
                                        std::size_t day, std::size_t node) {
  if (node >= corpus.graph.node_count()) throw NotFound("node index out of range");
  return series_for(predict_day(model, corpus, counterfactual, day), corpus, node);
}

ImpactReport network_impact(const TgcnModel& model, const Corpus& corpus,
                            std::span<const StaticFeatures> counterfactual, std::size_t day,
                            std::size_t target_node) {
  if (target_node >= corpus.graph.node_count()) throw NotFound("node index out of range");
  const DayPredictions p = predict_day(model, corpus, counterfactual, day);
  ImpactReport r;
  r.day = day;
  r.date = format_timestamp(corpus.speeds.timestamp(day * corpus.speeds.steps_per_day())).substr(0, 10);
  r.target_node = corpus.graph.node_ids[target_node];
  r.target = series_for(p, corpus, target_node);
  const Eigen::MatrixXd delta = p.counterfactual - p.original;
  for (std::size_t node = 0; node < corpus.graph.node_count(); ++node) {
    const auto col = delta.col(static_cast<Eigen::Index>(node));
    r.nodes.push_back({corpus.graph.node_ids[node], col.maxCoeff(), col.minCoeff(), col.mean()});
  }
  r.worst = *std::min_element(r.nodes.begin(), r.nodes.end(), [](const auto& a, const auto& b) {
    return a.max_decrease < b.max_decrease;
  });
  for (std::size_t node = 0; node < corpus.graph.node_count(); ++node) {
    if (counterfactual[node] == corpus.statics[node]) continue;
    FeatureDiff d{corpus.graph.node_ids[node], corpus.statics[node], counterfactual[node]};
    r.total_poi += d.delta_poi();
    r.total_lanes += d.delta_lanes();
    r.total_speed_limit += d.delta_speed_limit();
    r.diff.push_back(d);
  }
  return r;
}

ImpactReport candidate_impact(const TgcnModel& model, const Corpus& corpus,
                              const FrontDocument& front, std::size_t candidate,
                              std::optional<std::size_t> day) {
  const auto it = std::find_if(front.candidates.begin(), front.candidates.end(),
                               [&](const FrontCandidate& c) { return c.id == candidate; });
  if (it == front.candidates.end()) {
    throw NotFound("candidate " + std::to_string(candidate) + " not in front");
  }
  if (it->genes.size() != front.segment_ids.size() * kFeaturesPerSegment) {
    throw DimensionError("candidate genes do not match the front layout");
  }
  std::vector<StaticFeatures> statics = corpus.statics;
  for (std::size_t pos = 0; pos < front.segment_ids.size(); ++pos) {
    StaticFeatures& s = statics[corpus.graph.require_index(front.segment_ids[pos])];
    s.poi_count = static_cast<int>(std::lround(it->genes[pos * kFeaturesPerSegment]));
    s.lane_count = static_cast<int>(std::lround(it->genes[pos * kFeaturesPerSegment + 1]));
    s.speed_limit = it->genes[pos * kFeaturesPerSegment + 2];
  }
  if (!day) {
    const auto offset = std::chrono::duration_cast<std::chrono::minutes>(
        parse_timestamp(front.window_start) - corpus.speeds.start);
    const long per_day = 24 * 60;
    day = static_cast<std::size_t>(std::max<long>(0, offset.count()) / per_day);
  }
  ImpactReport r =
      network_impact(model, corpus, statics, *day, corpus.graph.require_index(front.target_node));
  r.candidate = candidate;
  return r;
}

std::string impact_to_json(const ImpactReport& r) {
  json nodes = json::array();
  for (const auto& n : r.nodes) {
    nodes.push_back({{"node", n.node},
                     {"max_increase", n.max_increase},
                     {"max_decrease", n.max_decrease},
                     {"mean_delta", n.mean_delta}});
  }
  json diff = json::array();
  for (const auto& d : r.diff) {
    diff.push_back({{"node", d.node},
                    {"original", static_json(d.original)},
                    {"counterfactual", static_json(d.counterfactual)},
                    {"delta",
                     {{"poi_count", d.delta_poi()},
                      {"lane_count", d.delta_lanes()},
                      {"speed_limit", d.delta_speed_limit()}}}});
  }
  json out{{"schema_version", 1},
           {"unit", "km/h"},
           {"aggregation", "day"},
           {"day", r.day},
           {"date", r.date},
           {"candidate", r.candidate},
           {"target_node", r.target_node},
           {"target_series",
            {{"timestamps", r.target.timestamps},
             {"original", r.target.original},
             {"counterfactual", r.target.counterfactual},
             {"truth", r.target.truth}}},
           {"nodes", nodes},
           {"worst_decrease", {{"node", r.worst.node}, {"delta", r.worst.max_decrease}}},
           {"feature_diff", diff},
           {"totals",
            {{"poi_count", r.total_poi},
             {"lane_count", r.total_lanes},
             {"speed_limit", r.total_speed_limit}}}};
  return out.dump(2) + "\n";
}

std::string diff_to_csv(const ImpactReport& r) {
  std::ostringstream out;
  out << kSchemaLine;
  out << "node_id,poi_count_original,poi_count_counterfactual,poi_count_delta,"
         "lane_count_original,lane_count_counterfactual,lane_count_delta,"
         "speed_limit_original,speed_limit_counterfactual,speed_limit_delta\n";
  for (const auto& d : r.diff) {
    out << d.node << ',' << d.original.poi_count << ',' << d.counterfactual.poi_count << ','
        << format_double(d.delta_poi()) << ',' << d.original.lane_count << ','
        << d.counterfactual.lane_count << ',' << format_double(d.delta_lanes()) << ','
        << format_double(d.original.speed_limit) << ','
        << format_double(d.counterfactual.speed_limit) << ','
        << format_double(d.delta_speed_limit()) << '\n';
  }
  out << "total,,," << format_double(r.total_poi) << ",,," << format_double(r.total_lanes)
      << ",,," << format_double(r.total_speed_limit) << '\n';
  return out.str();
}

std::string export_objective_distribution(const FrontDocument& front,
                                          const EvaluationWeights& weights) {
  std::vector<ObjectiveVector> objectives;
  for (const auto& c : front.candidates) objectives.push_back(c.objectives);
  const ObjectiveVector maxima = objective_maxima(objectives);
  std::ostringstream out;
  out << kSchemaLine << "candidate,validity,proximity,sparsity,plausibility,score\n";
  for (const auto& c : front.candidates) {
    const auto& o = c.objectives;
    out << c.id << ',' << format_double(o.validity) << ',' << format_double(o.proximity) << ','
        << format_double(o.sparsity) << ',' << format_double(o.plausibility) << ','
        << format_double(evaluation_score(o, maxima, weights)) << '\n';
  }
  return out.str();
}

std::vector<DistributionRow> read_objective_distribution(const std::string& csv) {
  std::vector<DistributionRow> rows;
  std::istringstream in(csv);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "candidate,validity,proximity,sparsity,plausibility,score") {
        throw InvalidInput("unexpected objective distribution header");
      }
      header = true;
      continue;
    }
    std::istringstream fields(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(fields, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
        throw InvalidInput("malformed objective distribution cell: " + cell);
      }
      values.push_back(v);
    }
    if (values.size() != 6) throw InvalidInput("objective distribution row needs six columns");
    rows.push_back({static_cast<std::size_t>(values[0]),
                    {values[1], values[2], values[3], values[4]},
                    values[5]});
  }
  return rows;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("spearman inputs differ in length");
  const std::size_t n = x.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace cfx
