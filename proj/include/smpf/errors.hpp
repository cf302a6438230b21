// Copyright 2026 The smpf Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smpf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments: dimension mismatches, malformed tables, invalid options.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Non-finite state during forward simulation.
class SimulationError : public Error {
 public:
  SimulationError(std::size_t path, std::size_t step, const std::string& what)
      : Error("simulation blow-up on path " + std::to_string(path) +
              " at step " + std::to_string(step) + ": " + what),
        path_(path),
        step_(step) {}

  /// Same location with `context` prefixed to the message.
  SimulationError(const std::string& context, const SimulationError& inner)
      : Error(context + ": " + inner.what()), path_(inner.path_), step_(inner.step_) {}

  std::size_t path() const { return path_; }
  std::size_t step() const { return step_; }

 private:
  std::size_t path_;
  std::size_t step_;
};

/// Linear-algebra failures in the backward solvers and the Riccati oracle.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration problems. The message names the offending block.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace smpf
