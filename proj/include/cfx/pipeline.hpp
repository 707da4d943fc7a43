// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cfx/checkpoint.hpp"
#include "cfx/corpus.hpp"
#include "cfx/impact.hpp"
#include "cfx/metrics.hpp"
#include "cfx/run_dir.hpp"
#include "cfx/search.hpp"
#include "cfx/training.hpp"

namespace cfx {

/// Run-level steps shared by the CLI and the job runner. Each reads and writes
/// files in a RunDirectory.

struct TrainOptions {
  TrainingConfig config;
  std::size_t test_days = 3;     // trailing days held out
  std::size_t train_stride = 4;  // steps between training windows
  std::size_t test_stride = 12;
};

struct TrainSummary {
  MetricsReport metrics;  // held-out windows
  std::vector<EpochStats> trace;
  std::size_t train_windows = 0;
  std::size_t test_windows = 0;
};

struct DataSplit {
  std::vector<FeatureWindow> train;
  std::vector<FeatureWindow> test;
};

/// Chronological split: the last `test_days` days form the test set.
DataSplit split_windows(const Corpus& corpus, const TrainOptions& options, double speed_scale,
                        std::size_t window_length, std::size_t horizon_length);

/// Throws NotFound when the corpus is missing.
Corpus load_run_corpus(const RunDirectory& run);
/// Throws NotFound("model not found: ...") when model.json is missing.
Checkpoint load_run_model(const RunDirectory& run);

void synth_run(const RunDirectory& run, const SyntheticCorpusSpec& spec);
TrainSummary train_run(const RunDirectory& run, const TrainOptions& options);

/// Training without touching disk; used by tests and the acceptance harness.
TrainResult train_corpus(const Corpus& corpus, const TrainOptions& options, DataSplit* split = nullptr);

struct ExplainResult {
  SearchProblem problem;
  SearchOutcome outcome;
  FrontDocument front;
};

/// Runs a search against the run's corpus and model and writes search.json,
/// history.ndjson, front.json, front.csv and meta.json into `out`.
ExplainResult explain_run(const RunDirectory& run, const SearchConfig& config,
                          const RunDirectory& out, const nsga2::EvolveHooks& hooks = {});

/// Writes the search artifacts of a finished search into `out`.
void write_search_artifacts(const RunDirectory& out, const ExplainResult& result);

FrontDocument load_front(const RunDirectory& dir);
std::string rank_run(const RunDirectory& dir, const EvaluationWeights& weights);

/// Candidate defaults to the optimum under the saved config weights. Writes
/// impact.json and diff.csv into `out`.
ImpactReport impact_run(const RunDirectory& run, const RunDirectory& out,
                        std::optional<std::size_t> candidate, std::optional<std::size_t> day);

/// Merges `section` into meta.json under `key`, stamping versions and time.
void update_meta(const RunDirectory& run, const std::string& key, const nlohmann::json& section);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cfx
