// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cfx/run_dir.hpp"
#include "cfx/search.hpp"

namespace cfx {

enum class JobState { queued, running, done, failed };

std::string to_string(JobState s);
JobState job_state_from_string(const std::string& name);

struct JobRecord {
  std::string id;
  JobState state = JobState::queued;
  std::size_t progress = 0;  // completed generations
  std::size_t generations = 0;
  SearchConfig config;
  std::string error;
  std::optional<std::size_t> front_size;

  nlohmann::json to_json() const;
  static JobRecord from_json(const nlohmann::json& doc);
};

/// Progress callback and cancellation probe handed to a job body.
struct JobContext {
  std::function<void(std::size_t generation)> progress;
  std::function<bool()> cancelled;
};

/// Executes one search job; writes its artifacts into `job_dir` and returns
/// the front size. Returning with cancelled() true marks the job cancelled.
using JobBody = std::function<std::size_t(const SearchConfig& config, const RunDirectory& job_dir,
                                          const JobContext& ctx)>;

/// Bounded worker pool over a file-backed job table under `run/jobs`.
class JobManager {
 public:
  /// Reloads existing job records; queued or running ones become failed with
  /// "interrupted".
  JobManager(RunDirectory run, std::size_t max_concurrent, JobBody body);
  ~JobManager();

  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  JobRecord submit(const SearchConfig& config);
  std::optional<JobRecord> get(const std::string& id) const;
  std::vector<JobRecord> list() const;
  /// Queued or running jobs become failed with "cancelled". Returns the
  /// updated record, or nullopt for an unknown id.
  std::optional<JobRecord> cancel(const std::string& id);
  RunDirectory job_dir(const std::string& id) const;

  /// Blocks until no job is queued or running.
  void wait_idle();

 private:
  struct Entry {
    JobRecord record;
    std::shared_ptr<std::atomic<bool>> cancel_flag = std::make_shared<std::atomic<bool>>(false);
  };

  void worker_loop();
  void persist(const JobRecord& record) const;
  void run_job(const std::string& id);

  RunDirectory run_;
  JobBody body_;
  mutable std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable idle_;
  std::map<std::string, Entry> jobs_;
  std::deque<std::string> queue_;
  std::size_t active_ = 0;
  std::size_t next_id_ = 1;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

/// Job body that runs the search against the run's corpus and model.
JobBody search_job_body(const RunDirectory& run);

}  // namespace cfx
