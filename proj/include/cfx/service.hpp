// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include "cfx/jobs.hpp"
#include "cfx/run_dir.hpp"

namespace httplib {
class Server;
}

namespace cfx {

struct ServiceOptions {
  RunDirectory run;
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::size_t max_jobs = 1;
  std::filesystem::path ui_dir;  // served under /ui when it exists
};

/// HTTP front end over a run directory. Endpoints are listed in docs/api.md.
class Service {
 public:
  explicit Service(ServiceOptions options);
  Service(ServiceOptions options, JobBody body);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and serves on a background thread. Returns the bound port.
  int start();
  /// Binds and serves on the calling thread until stop().
  bool run();
  void stop();

  JobManager& jobs() { return *jobs_; }
  int port() const { return port_; }

 private:
  void install_routes();

  ServiceOptions options_;
  std::unique_ptr<JobManager> jobs_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace cfx
