// SPDX-License-Identifier: Apache-2.0
#include "cfx/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cfx/error.hpp"
#include "cfx/pipeline.hpp"
#include "cfx/service.hpp"
#include "cfx/timeutil.hpp"

namespace cfx {

using nlohmann::json;

void configure_logging() {
  auto logger = spdlog::get("cfx");
  if (!logger) logger = spdlog::stderr_color_mt("cfx");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("CFX_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

namespace {

std::vector<FeatureGroup> parse_groups(const std::string& text) {
  std::vector<FeatureGroup> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(feature_group_from_string(item));
    } catch (const InvalidInput& e) {
      throw ConfigError("$.features", e.what());
    }
  }
  return out;
}

struct SynthArgs {
  std::string out;
  SyntheticCorpusSpec spec;
};

struct TrainArgs {
  std::string run_dir;
  TrainOptions options;
  std::string features;
};

struct PredictArgs {
  std::string run_dir;
  std::string window_start;
  std::string node;
};

struct ExplainArgs {
  std::string run_dir;
  std::string config;
  std::string out;
  std::string target_node;
  std::string window_start;
  std::optional<double> target_speed;
  std::optional<double> target_delta;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> generations;
  std::optional<std::size_t> population;
};

struct RankArgs {
  std::string run_dir;
  std::string weights = "1,0.2,0.2,0.6";
};

struct ImpactArgs {
  std::string run_dir;
  std::string out;
  std::optional<std::size_t> candidate;
  std::optional<std::size_t> day;
};

struct ServeArgs {
  std::string run_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_jobs = 1;
  std::string ui_dir;
};

int do_synth(const SynthArgs& a, std::ostream& out) {
  a.spec.validate();
  synth_run({a.out}, a.spec);
  out << json{{"corpus", (std::filesystem::path(a.out) / "corpus").string()},
              {"nodes", a.spec.node_count},
              {"days", a.spec.days},
              {"seed", a.spec.seed}}
             .dump()
      << '\n';
  return kExitOk;
}

int do_train(TrainArgs a, std::ostream& out) {
  if (!a.features.empty()) a.options.config.features = parse_groups(a.features);
  const TrainSummary summary = train_run({a.run_dir}, a.options);
  out << summary.metrics.to_json() << '\n';
  return kExitOk;
}

int do_predict(const PredictArgs& a, std::ostream& out) {
  const RunDirectory run{a.run_dir};
  const Checkpoint ckpt = load_run_model(run);
  const Corpus corpus = load_run_corpus(run);
  const Timestamp start = parse_timestamp(a.window_start);
  const auto offset = std::chrono::duration_cast<std::chrono::minutes>(start - corpus.speeds.start);
  if (offset.count() < 0 || offset.count() % corpus.speeds.interval_minutes != 0) {
    throw RangeError("window start is not a corpus time step");
  }
  const auto step = static_cast<std::size_t>(offset.count() / corpus.speeds.interval_minutes);
  if (step + ckpt.model.window_length + ckpt.model.horizon_length > corpus.speeds.time_steps()) {
    throw RangeError("window extends past the end of the corpus");
  }
  const WindowSpec spec{ckpt.model.window_length, ckpt.model.horizon_length, 1};
  const FeatureWindow window =
      window_at(corpus.speeds, corpus.statics, corpus.context, step, spec, ckpt.model.speed_scale);
  const Eigen::MatrixXd pred = model_forward(ckpt.model, window);
  json nodes = json::object();
  for (std::size_t n = 0; n < corpus.graph.node_count(); ++n) {
    if (!a.node.empty() && corpus.graph.node_ids[n] != a.node) continue;
    const Eigen::VectorXd col = pred.col(static_cast<Eigen::Index>(n));
    nodes[corpus.graph.node_ids[n]] = std::vector<double>(col.data(), col.data() + col.size());
  }
  if (!a.node.empty() && nodes.empty()) throw NotFound("unknown node '" + a.node + "'");
  out << json{{"window_start", a.window_start}, {"unit", "km/h"}, {"predictions", nodes}}.dump(2)
      << '\n';
  return kExitOk;
}

int do_explain(const ExplainArgs& a, std::ostream& out) {
  SearchConfig config;
  if (!a.config.empty()) {
    config = parse_search_config(read_file(a.config));
  }
  if (!a.target_node.empty()) config.target_node = a.target_node;
  if (!a.window_start.empty()) config.window_start = a.window_start;
  if (a.target_speed) {
    config.target_speed = a.target_speed;
    config.target_delta.reset();
  }
  if (a.target_delta) {
    config.target_delta = a.target_delta;
    config.target_speed.reset();
  }
  if (a.seed) config.seed = *a.seed;
  if (a.generations) config.generations = *a.generations;
  if (a.population) config.population_size = *a.population;
  config.validate();
  const RunDirectory run{a.run_dir};
  const RunDirectory dest{a.out.empty() ? a.run_dir : a.out};
  const ExplainResult result = explain_run(run, config, dest);
  const auto ranked = json::parse(rank_to_json(result.front, config.weights));
  out << json{{"front_size", result.front.candidates.size()},
              {"original_prediction", result.problem.original_prediction},
              {"target_speed", result.problem.target_speed},
              {"selected", ranked.at("selected")},
              {"front", dest.front_json().string()}}
             .dump(2)
      << '\n';
  return kExitOk;
}

int do_rank(const RankArgs& a, std::ostream& out) {
  out << rank_run({a.run_dir}, parse_weights(a.weights));
  return kExitOk;
}

int do_impact(const ImpactArgs& a, std::ostream& out) {
  const RunDirectory run{a.run_dir};
  const RunDirectory dest{a.out.empty() ? a.run_dir : a.out};
  const ImpactReport r = impact_run(run, dest, a.candidate, a.day);
  out << json{{"candidate", r.candidate},
              {"day", r.day},
              {"worst_decrease", {{"node", r.worst.node}, {"delta", r.worst.max_decrease}}},
              {"impact", dest.impact().string()},
              {"diff", dest.diff().string()}}
             .dump(2)
      << '\n';
  return kExitOk;
}

int do_serve(const ServeArgs& a) {
  ServiceOptions opts;
  opts.run = {a.run_dir};
  opts.host = a.host;
  opts.port = a.port;
  opts.max_jobs = a.max_jobs;
  opts.ui_dir = a.ui_dir;
  Service service(opts);
  return service.run() ? kExitOk : kExitRuntime;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Counterfactual explanations for graph traffic forecasts", "cfx"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth_cmd->add_option("--out", synth.out, "Run directory")->required();
  synth_cmd->add_option("--nodes", synth.spec.node_count, "Number of road segments");
  synth_cmd->add_option("--days", synth.spec.days, "Number of days");
  synth_cmd->add_option("--seed", synth.spec.seed, "Random seed");
  synth_cmd->add_option("--segments-per-road", synth.spec.segments_per_road);
  synth_cmd->add_option("--noise", synth.spec.noise_std, "Noise std in km/h");
  synth_cmd->add_option("--start", synth.spec.start, "First timestamp");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train the forecaster");
  train_cmd->add_option("--run-dir", train_args.run_dir)->required();
  train_cmd->add_option("--epochs", train_args.options.config.epochs);
  train_cmd->add_option("--lr", train_args.options.config.learning_rate);
  train_cmd->add_option("--l1", train_args.options.config.l1_lambda);
  train_cmd->add_option("--hidden", train_args.options.config.hidden_dim);
  train_cmd->add_option("--batch", train_args.options.config.batch_size);
  train_cmd->add_option("--seed", train_args.options.config.seed);
  train_cmd->add_option("--test-days", train_args.options.test_days);
  train_cmd->add_option("--stride", train_args.options.train_stride, "Training window stride");
  train_cmd->add_option("--features", train_args.features, "Comma-separated input groups");

  PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Forecast one window");
  predict_cmd->add_option("--run-dir", predict.run_dir)->required();
  predict_cmd->add_option("--window-start", predict.window_start)->required();
  predict_cmd->add_option("--node", predict.node);

  ExplainArgs explain;
  auto* explain_cmd = app.add_subcommand("explain", "Search for counterfactual explanations");
  explain_cmd->add_option("--run-dir", explain.run_dir)->required();
  explain_cmd->add_option("--config", explain.config, "SearchConfig JSON file");
  explain_cmd->add_option("--out", explain.out, "Output directory (default: run directory)");
  explain_cmd->add_option("--target-node", explain.target_node);
  explain_cmd->add_option("--window-start", explain.window_start);
  explain_cmd->add_option("--target-speed", explain.target_speed);
  explain_cmd->add_option("--target-delta", explain.target_delta);
  explain_cmd->add_option("--seed", explain.seed);
  explain_cmd->add_option("--generations", explain.generations);
  explain_cmd->add_option("--population", explain.population);

  RankArgs rank;
  auto* rank_cmd = app.add_subcommand("rank", "Rank a saved front");
  rank_cmd->add_option("--run-dir", rank.run_dir, "Directory holding front.json")->required();
  rank_cmd->add_option("--weights", rank.weights, "Four comma-separated weights");

  ImpactArgs impact;
  auto* impact_cmd = app.add_subcommand("impact", "Network impact of one candidate");
  impact_cmd->add_option("--run-dir", impact.run_dir)->required();
  impact_cmd->add_option("--out", impact.out, "Search directory (default: run directory)");
  impact_cmd->add_option("--candidate", impact.candidate);
  impact_cmd->add_option("--day", impact.day);

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP service");
  serve_cmd->add_option("--run-dir", serve.run_dir)->required();
  serve_cmd->add_option("--host", serve.host);
  serve_cmd->add_option("--port", serve.port);
  serve_cmd->add_option("--max-jobs", serve.max_jobs);
  serve_cmd->add_option("--ui-dir", serve.ui_dir);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return do_synth(synth, out);
    if (train_cmd->parsed()) return do_train(train_args, out);
    if (predict_cmd->parsed()) return do_predict(predict, out);
    if (explain_cmd->parsed()) return do_explain(explain, out);
    if (rank_cmd->parsed()) return do_rank(rank, out);
    if (impact_cmd->parsed()) return do_impact(impact, out);
    if (serve_cmd->parsed()) return do_serve(serve);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace cfx
