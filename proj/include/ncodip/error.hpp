// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ncodip contributors

#pragma once

#include <stdexcept>
#include <string>

namespace ncodip {

// Exit codes used by the CLI: 0 success, 2 usage/config/data error,
// 3 runtime divergence.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitDivergence = 3,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input: corpus records, unknown labels, broken tree structure.
class DataError : public Error {
 public:
  using Error::Error;
};

// Bad configuration values or schema violations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss or parameter.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& msg, long step)
      : Error(msg + " (step " + std::to_string(step) + ")"), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace ncodip
