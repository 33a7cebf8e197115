// Copyright 2026 The catpump Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace catpump {

/// Base class of every error raised by the library. `kind()` is a short
/// stable identifier used in the CLI's machine-readable error summary.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct UnknownModeError : Error {
  explicit UnknownModeError(const std::string& w) : Error("unknown_mode", w) {}
};

struct SpaceMismatchError : Error {
  explicit SpaceMismatchError(const std::string& w) : Error("space_mismatch", w) {}
};

struct TruncationError : Error {
  explicit TruncationError(const std::string& w) : Error("truncation", w) {}
};

struct InvalidStateError : Error {
  explicit InvalidStateError(const std::string& w) : Error("invalid_state", w) {}
};

struct InvalidModelError : Error {
  explicit InvalidModelError(const std::string& w) : Error("invalid_model", w) {}
};

struct DimensionOverflowError : Error {
  explicit DimensionOverflowError(const std::string& w) : Error("dimension_overflow", w) {}
};

struct StiffnessError : Error {
  StiffnessError(const std::string& w, double rate)
      : Error("stiffness", w), stiff_rate(rate) {}
  double stiff_rate;
};

struct DegenerateSteadyStateError : Error {
  DegenerateSteadyStateError(const std::string& w, int dim_estimate)
      : Error("degenerate_steady_state", w), null_dimension(dim_estimate) {}
  /// Estimated null-space dimension; -1 when only a lower bound of 2 is known.
  int null_dimension;
};

struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& w) : Error("non_convergence", w) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error("io", w) {}
};

}  // namespace catpump
