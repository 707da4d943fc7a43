// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cfx {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data that cannot be encoded (non-finite weather, bad timestamp).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A configuration document failed validation. `path()` names the offending
/// field in JSON-pointer-like dotted form, e.g. `$.feasible_ranges.poi_count`.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}
  explicit ConfigError(const std::string& message) : Error(message), path_("$") {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

}  // namespace cfx
