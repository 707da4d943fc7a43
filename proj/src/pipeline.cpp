// SPDX-License-Identifier: Apache-2.0
#include "cfx/pipeline.hpp"

#include <chrono>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cfx/error.hpp"
#include "cfx/timeutil.hpp"

namespace cfx {

using nlohmann::json;

namespace {

std::string now_utc() {
  const auto now = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
  return format_timestamp(now) + "Z";
}

SpeedSeries slice(const SpeedSeries& s, std::size_t first, std::size_t count) {
  SpeedSeries out = s;
  out.values = s.values.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
  out.start = s.timestamp(first);
  return out;
}

}  // namespace

DataSplit split_windows(const Corpus& corpus, const TrainOptions& options, double speed_scale,
                        std::size_t window_length, std::size_t horizon_length) {
  const std::size_t days = corpus.days();
  if (options.test_days == 0 || options.test_days >= days) {
    throw ConfigError("$.test_days", "must leave at least one training day");
  }
  if (options.train_stride == 0 || options.test_stride == 0) {
    throw ConfigError("$.stride", "must be positive");
  }
  const std::size_t per_day = corpus.speeds.steps_per_day();
  const std::size_t split = (days - options.test_days) * per_day;
  const std::size_t total = corpus.speeds.time_steps();
  const std::span<const DynamicContext> ctx(corpus.context);

  DataSplit out;
  out.train = make_windows(slice(corpus.speeds, 0, split), corpus.statics, ctx.subspan(0, split),
                           {window_length, horizon_length, options.train_stride}, speed_scale);
  out.test = make_windows(slice(corpus.speeds, split, total - split), corpus.statics,
                          ctx.subspan(split, total - split),
                          {window_length, horizon_length, options.test_stride}, speed_scale);
  for (auto& w : out.test) w.start_step += split;
  return out;
}

Corpus load_run_corpus(const RunDirectory& run) {
  if (!std::filesystem::exists(run.corpus() / "graph.json")) {
    throw NotFound("corpus not found: " + run.corpus().string());
  }
  return load_corpus(run.corpus());
}

Checkpoint load_run_model(const RunDirectory& run) { return load_checkpoint(run.model()); }

void update_meta(const RunDirectory& run, const std::string& key, const json& section) {
  json meta = json::object();
  if (std::filesystem::exists(run.meta())) {
    try {
      meta = json::parse(read_file(run.meta()));
    } catch (const json::exception&) {
      spdlog::warn("replacing unreadable {}", run.meta().string());
    }
  }
  meta["schema_version"] = 1;
  meta["version"] = kVersion;
  json entry = section;
  entry["completed_at"] = now_utc();
  meta[key] = entry;
  write_file_atomic(run.meta(), meta.dump(2) + "\n");
}

void synth_run(const RunDirectory& run, const SyntheticCorpusSpec& spec) {
  const Corpus corpus = synth_generate(spec);
  save_corpus(corpus, run.corpus());
  update_meta(run, "synth",
              {{"seed", spec.seed}, {"nodes", spec.node_count}, {"days", spec.days}});
}

TrainResult train_corpus(const Corpus& corpus, const TrainOptions& options, DataSplit* split_out) {
  options.config.validate();
  const double scale = corpus.speed_scale();
  ModelShape shape;
  shape.hidden_dim = options.config.hidden_dim;
  shape.gcn_dim = options.config.hidden_dim;
  TgcnModel model = init_model(corpus.graph, shape, scale, options.config.seed);
  DataSplit split = split_windows(corpus, options, scale, model.window_length, model.horizon_length);
  spdlog::info("training on {} windows, testing on {}", split.train.size(), split.test.size());
  TrainResult result = train(std::move(model), split.train, split.test, options.config,
                             [](const EpochStats& s) {
                               spdlog::debug("epoch {} train {:.6g} test {:.6g}", s.epoch,
                                             s.train_loss, s.test_loss);
                             });
  if (split_out) *split_out = std::move(split);
  return result;
}

TrainSummary train_run(const RunDirectory& run, const TrainOptions& options) {
  const Corpus corpus = load_run_corpus(run);
  DataSplit split;
  TrainResult result = train_corpus(corpus, options, &split);
  TrainSummary summary;
  summary.metrics = evaluate_model(result.model, split.test);
  summary.trace = std::move(result.trace);
  summary.train_windows = split.train.size();
  summary.test_windows = split.test.size();
  save_checkpoint({std::move(result.model), options.config, corpus.graph.node_ids}, run.model());
  write_file_atomic(run.metrics(), summary.metrics.to_json() + "\n");
  update_meta(run, "train",
              {{"seed", options.config.seed},
               {"epochs", options.config.epochs},
               {"test_days", options.test_days},
               {"train_stride", options.train_stride},
               {"train_windows", summary.train_windows},
               {"test_windows", summary.test_windows}});
  return summary;
}

void write_search_artifacts(const RunDirectory& out, const ExplainResult& result) {
  std::filesystem::create_directories(out.root);
  write_file_atomic(out.search(), dump_search_config(result.problem.config));
  write_file_atomic(out.history(), history_to_ndjson(result.outcome.history));
  write_file_atomic(out.front_json(), front_to_json(result.front));
  write_file_atomic(out.front_csv(),
                    export_objective_distribution(result.front, result.problem.config.weights));
}

ExplainResult explain_run(const RunDirectory& run, const SearchConfig& config,
                          const RunDirectory& out, const nsga2::EvolveHooks& hooks) {
  const Checkpoint ckpt = load_run_model(run);
  const Corpus corpus = load_run_corpus(run);
  if (ckpt.node_ids != corpus.graph.node_ids) {
    throw ConfigError("$", "model was trained on a different graph");
  }
  ExplainResult result{prepare_search(config, corpus, ckpt.model), {}, {}};
  spdlog::info("search on {} genes, original prediction {:.4f} km/h, target {:.4f} km/h",
               result.problem.layout.size(), result.problem.original_prediction,
               result.problem.target_speed);
  result.outcome = run_search(result.problem, ckpt.model, hooks);
  result.front = make_front_document(result.problem, result.outcome);
  if (result.outcome.cancelled) return result;
  write_search_artifacts(out, result);
  update_meta(out, "explain",
              {{"seed", config.seed},
               {"generations", result.outcome.history.size()},
               {"evaluations", result.outcome.evaluations},
               {"front_size", result.front.candidates.size()},
               {"score_maxima", "final_front"}});
  return result;
}

FrontDocument load_front(const RunDirectory& dir) {
  if (!std::filesystem::exists(dir.front_json())) {
    throw NotFound("front not found: " + dir.front_json().string());
  }
  return front_from_json(read_file(dir.front_json()));
}

std::string rank_run(const RunDirectory& dir, const EvaluationWeights& weights) {
  return rank_to_json(load_front(dir), weights);
}

ImpactReport impact_run(const RunDirectory& run, const RunDirectory& out,
                        std::optional<std::size_t> candidate, std::optional<std::size_t> day) {
  const FrontDocument front = load_front(out);
  if (!candidate) {
    const SearchConfig config = parse_search_config(read_file(out.search()));
    const auto ranked = json::parse(rank_to_json(front, config.weights));
    candidate = ranked.at("selected").get<std::size_t>();
  }
  const Checkpoint ckpt = load_run_model(run);
  const Corpus corpus = load_run_corpus(run);
  ImpactReport report = candidate_impact(ckpt.model, corpus, front, *candidate, day);
  write_file_atomic(out.impact(), impact_to_json(report));
  write_file_atomic(out.diff(), diff_to_csv(report));
  return report;
}

}  // namespace cfx
