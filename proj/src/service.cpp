// SPDX-License-Identifier: Apache-2.0
#include "cfx/service.hpp"

#include <charconv>
#include <mutex>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cfx/error.hpp"
#include "cfx/pipeline.hpp"

namespace cfx {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, kJson);
}

void send_error(httplib::Response& res, int status, const std::string& message,
                const std::string& path = "") {
  json body{{"error", message}};
  if (!path.empty()) body["path"] = path;
  send_json(res, status, body.dump() + "\n");
}

void send_file(httplib::Response& res, const std::filesystem::path& file, const char* type) {
  if (!std::filesystem::exists(file)) {
    send_error(res, 404, "not found: " + file.filename().string());
    return;
  }
  res.status = 200;
  res.set_content(read_file(file), type);
}

std::optional<std::size_t> parse_index(const std::string& text) {
  std::size_t v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return v;
}

}  // namespace

Service::Service(ServiceOptions options)
    : Service(options, search_job_body(options.run)) {}

Service::Service(ServiceOptions options, JobBody body)
    : options_(std::move(options)),
      jobs_(std::make_unique<JobManager>(options_.run, options_.max_jobs, std::move(body))),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

Service::~Service() {
  stop();
  jobs_.reset();
}

int Service::start() {
  port_ = options_.port == 0 ? server_->bind_to_any_port(options_.host)
                             : (server_->bind_to_port(options_.host, options_.port) ? options_.port : -1);
  if (port_ < 0) throw Error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

bool Service::run() {
  port_ = options_.port == 0 ? server_->bind_to_any_port(options_.host)
                             : (server_->bind_to_port(options_.host, options_.port) ? options_.port : -1);
  if (port_ < 0) throw Error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
  spdlog::info("serving {} on http://{}:{}", options_.run.root.string(), options_.host, port_);
  return server_->listen_after_bind();
}

void Service::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

void Service::install_routes() {
  httplib::Server& s = *server_;
  const RunDirectory run = options_.run;

  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    } catch (...) {
      send_error(res, 500, "internal error");
    }
  });

  s.Get("/graph", [run](const httplib::Request&, httplib::Response& res) {
    send_file(res, run.corpus() / "graph.json", kJson);
  });

  s.Get("/model/metrics", [run](const httplib::Request&, httplib::Response& res) {
    send_file(res, run.metrics(), kJson);
  });

  s.Get("/jobs", [this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& r : jobs_->list()) out.push_back(r.to_json());
    send_json(res, 200, out.dump(2) + "\n");
  });

  s.Post("/jobs", [this, run](const httplib::Request& req, httplib::Response& res) {
    SearchConfig config;
    try {
      config = parse_search_config(req.body);
    } catch (const ConfigError& e) {
      send_error(res, 400, e.what(), e.path());
      return;
    }
    try {
      const Checkpoint ckpt = load_run_model(run);
      const Corpus corpus = load_run_corpus(run);
      (void)prepare_search(config, corpus, ckpt.model);
    } catch (const ConfigError& e) {
      send_error(res, 400, e.what(), e.path());
      return;
    } catch (const NotFound& e) {
      send_error(res, 409, e.what());
      return;
    }
    send_json(res, 201, jobs_->submit(config).to_json().dump(2) + "\n");
  });

  s.Get(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto record = jobs_->get(req.matches[1]);
    if (!record) return send_error(res, 404, "unknown job " + std::string(req.matches[1]));
    send_json(res, 200, record->to_json().dump(2) + "\n");
  });

  s.Delete(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto before = jobs_->get(id);
    if (!before) return send_error(res, 404, "unknown job " + id);
    if (before->state == JobState::done || before->state == JobState::failed) {
      return send_error(res, 409, "job " + id + " already finished");
    }
    send_json(res, 200, jobs_->cancel(id)->to_json().dump(2) + "\n");
  });

  // Resolves a finished job or writes the error response.
  auto finished = [this](const std::string& id, httplib::Response& res) -> std::optional<RunDirectory> {
    const auto record = jobs_->get(id);
    if (!record) {
      send_error(res, 404, "unknown job " + id);
      return std::nullopt;
    }
    if (record->state != JobState::done) {
      send_error(res, 409, "job " + id + " is " + to_string(record->state));
      return std::nullopt;
    }
    return jobs_->job_dir(id);
  };

  s.Get(R"(/jobs/([^/]+)/front)", [finished](const httplib::Request& req, httplib::Response& res) {
    const auto dir = finished(req.matches[1], res);
    if (!dir) return;
    if (req.get_param_value("format") == "csv") {
      send_file(res, dir->front_csv(), "text/csv");
    } else {
      send_file(res, dir->front_json(), kJson);
    }
  });

  s.Get(R"(/jobs/([^/]+)/history)", [finished](const httplib::Request& req, httplib::Response& res) {
    const auto dir = finished(req.matches[1], res);
    if (dir) send_file(res, dir->history(), "application/x-ndjson");
  });

  s.Post(R"(/jobs/([^/]+)/rank)", [finished](const httplib::Request& req, httplib::Response& res) {
    const auto dir = finished(req.matches[1], res);
    if (!dir) return;
    EvaluationWeights weights;
    try {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error& e) {
        throw ConfigError("$", std::string("malformed JSON: ") + e.what());
      }
      weights = weights_from_json(body);
    } catch (const ConfigError& e) {
      return send_error(res, 400, e.what(), e.path());
    }
    send_json(res, 200, rank_run(*dir, weights));
  });

  s.Get(R"(/jobs/([^/]+)/impact)", [finished, run](const httplib::Request& req,
                                                    httplib::Response& res) {
    const auto dir = finished(req.matches[1], res);
    if (!dir) return;
    std::optional<std::size_t> candidate;
    std::optional<std::size_t> day;
    if (req.has_param("candidate")) {
      candidate = parse_index(req.get_param_value("candidate"));
      if (!candidate) return send_error(res, 400, "candidate must be a non-negative integer", "candidate");
    }
    if (req.has_param("day")) {
      day = parse_index(req.get_param_value("day"));
      if (!day) return send_error(res, 400, "day must be a non-negative integer", "day");
    }
    static std::mutex impact_mutex;
    std::lock_guard lock(impact_mutex);
    try {
      (void)impact_run(run, *dir, candidate, day);
    } catch (const NotFound& e) {
      return send_error(res, 404, e.what());
    } catch (const RangeError& e) {
      return send_error(res, 400, e.what(), "day");
    }
    send_file(res, dir->impact(), kJson);
  });

  if (!options_.ui_dir.empty() && std::filesystem::is_directory(options_.ui_dir)) {
    s.set_mount_point("/ui", options_.ui_dir.string());
  } else {
    s.Get("/ui", [](const httplib::Request&, httplib::Response& res) {
      send_error(res, 404, "ui assets not built");
    });
  }
}

}  // namespace cfx
