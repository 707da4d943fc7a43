// SPDX-License-Identifier: Apache-2.0
#include "cfx/jobs.hpp"

#include <algorithm>
#include <cstdio>

#include <spdlog/spdlog.h>

#include "cfx/error.hpp"
#include "cfx/pipeline.hpp"

namespace cfx {

using nlohmann::json;

std::string to_string(JobState s) {
  switch (s) {
    case JobState::queued: return "queued";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::failed: return "failed";
  }
  return "failed";
}

JobState job_state_from_string(const std::string& name) {
  for (auto s : {JobState::queued, JobState::running, JobState::done, JobState::failed}) {
    if (to_string(s) == name) return s;
  }
  throw InvalidInput("unknown job state: " + name);
}

json JobRecord::to_json() const {
  json out{{"id", id},
           {"state", to_string(state)},
           {"progress", progress},
           {"generations", generations},
           {"config", search_config_to_json(config)},
           {"error", error.empty() ? json(nullptr) : json(error)},
           {"front_size", front_size ? json(*front_size) : json(nullptr)}};
  return out;
}

JobRecord JobRecord::from_json(const json& doc) {
  JobRecord r;
  r.id = doc.at("id").get<std::string>();
  r.state = job_state_from_string(doc.at("state").get<std::string>());
  r.progress = doc.at("progress").get<std::size_t>();
  r.generations = doc.at("generations").get<std::size_t>();
  r.config = search_config_from_json(doc.at("config"));
  if (!doc.at("error").is_null()) r.error = doc.at("error").get<std::string>();
  if (!doc.at("front_size").is_null()) r.front_size = doc.at("front_size").get<std::size_t>();
  return r;
}

JobManager::JobManager(RunDirectory run, std::size_t max_concurrent, JobBody body)
    : run_(std::move(run)), body_(std::move(body)) {
  if (max_concurrent == 0) throw ConfigError("$.max_jobs", "must be positive");
  std::filesystem::create_directories(run_.jobs());
  for (const auto& entry : std::filesystem::directory_iterator(run_.jobs())) {
    const auto file = entry.path() / "job.json";
    if (!entry.is_directory() || !std::filesystem::exists(file)) continue;
    try {
      JobRecord record = JobRecord::from_json(json::parse(read_file(file)));
      if (record.state == JobState::queued || record.state == JobState::running) {
        record.state = JobState::failed;
        record.error = "interrupted";
        persist(record);
      }
      unsigned long n = 0;
      if (std::sscanf(record.id.c_str(), "job-%lu", &n) == 1) next_id_ = std::max<std::size_t>(next_id_, n + 1);
      jobs_[record.id].record = std::move(record);
    } catch (const std::exception& e) {
      spdlog::warn("skipping unreadable job record {}: {}", file.string(), e.what());
    }
  }
  for (std::size_t i = 0; i < max_concurrent; ++i) workers_.emplace_back([this] { worker_loop(); });
}

JobManager::~JobManager() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
    for (auto& [id, entry] : jobs_) entry.cancel_flag->store(true);
  }
  wake_.notify_all();
  for (auto& t : workers_) t.join();
}

RunDirectory JobManager::job_dir(const std::string& id) const { return {run_.jobs() / id}; }

void JobManager::persist(const JobRecord& record) const {
  const RunDirectory dir = job_dir(record.id);
  std::filesystem::create_directories(dir.root);
  write_file_atomic(dir.root / "job.json", record.to_json().dump(2) + "\n");
}

JobRecord JobManager::submit(const SearchConfig& config) {
  config.validate();
  std::lock_guard lock(mutex_);
  char id[32];
  std::snprintf(id, sizeof(id), "job-%04zu", next_id_++);
  Entry entry;
  entry.record.id = id;
  entry.record.generations = config.generations;
  entry.record.config = config;
  persist(entry.record);
  const JobRecord record = entry.record;
  jobs_.emplace(record.id, std::move(entry));
  queue_.push_back(record.id);
  wake_.notify_one();
  return record;
}

std::optional<JobRecord> JobManager::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second.record;
}

std::vector<JobRecord> JobManager::list() const {
  std::lock_guard lock(mutex_);
  std::vector<JobRecord> out;
  for (const auto& [id, entry] : jobs_) out.push_back(entry.record);
  return out;
}

std::optional<JobRecord> JobManager::cancel(const std::string& id) {
  std::lock_guard lock(mutex_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  Entry& entry = it->second;
  if (entry.record.state == JobState::queued) {
    queue_.erase(std::remove(queue_.begin(), queue_.end(), id), queue_.end());
    entry.record.state = JobState::failed;
    entry.record.error = "cancelled";
    persist(entry.record);
    idle_.notify_all();
  } else if (entry.record.state == JobState::running) {
    entry.cancel_flag->store(true);
    entry.record.state = JobState::failed;
    entry.record.error = "cancelled";
    persist(entry.record);
  }
  return entry.record;
}

void JobManager::wait_idle() {
  std::unique_lock lock(mutex_);
  idle_.wait(lock, [this] { return queue_.empty() && active_ == 0; });
}

void JobManager::worker_loop() {
  for (;;) {
    std::string id;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      id = queue_.front();
      queue_.pop_front();
      ++active_;
      auto& record = jobs_.at(id).record;
      record.state = JobState::running;
      persist(record);
    }
    run_job(id);
    {
      std::lock_guard lock(mutex_);
      --active_;
    }
    idle_.notify_all();
  }
}

void JobManager::run_job(const std::string& id) {
  SearchConfig config;
  std::shared_ptr<std::atomic<bool>> flag;
  {
    std::lock_guard lock(mutex_);
    config = jobs_.at(id).record.config;
    flag = jobs_.at(id).cancel_flag;
  }
  JobContext ctx;
  ctx.cancelled = [flag] { return flag->load(); };
  ctx.progress = [this, id](std::size_t generation) {
    std::lock_guard lock(mutex_);
    auto& record = jobs_.at(id).record;
    if (record.state != JobState::running) return;
    record.progress = generation;
    persist(record);
  };

  std::optional<std::size_t> front_size;
  std::string error;
  try {
    front_size = body_(config, job_dir(id), ctx);
  } catch (const std::exception& e) {
    error = e.what();
  } catch (...) {
    error = "unknown failure";
  }

  std::lock_guard lock(mutex_);
  auto& record = jobs_.at(id).record;
  if (record.state == JobState::failed) {
    // Cancelled while running; the record already says so.
  } else if (stopping_) {
    record.state = JobState::failed;
    record.error = "interrupted";
  } else if (flag->load()) {
    record.state = JobState::failed;
    record.error = "cancelled";
  } else if (!error.empty()) {
    record.state = JobState::failed;
    record.error = error;
    spdlog::error("job {} failed: {}", id, error);
  } else {
    record.state = JobState::done;
    record.front_size = front_size;
  }
  persist(record);
}

JobBody search_job_body(const RunDirectory& run) {
  return [run](const SearchConfig& config, const RunDirectory& job_dir, const JobContext& ctx) {
    nsga2::EvolveHooks hooks;
    hooks.on_generation = [&](const nsga2::GenerationRecord& g) { ctx.progress(g.generation); };
    hooks.should_stop = ctx.cancelled;
    const ExplainResult result = explain_run(run, config, job_dir, hooks);
    return result.front.candidates.size();
  };
}

}  // namespace cfx
