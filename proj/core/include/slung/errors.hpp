// Copyright 2026 The slungpinn Authors
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

#ifndef SLUNG_ERRORS_HPP_
#define SLUNG_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace slung {

// Cable collapsed: vehicle and load positions (nearly) coincide.
class DegenerateStateError : public std::runtime_error {
 public:
  explicit DegenerateStateError(const std::string& what, long step = -1)
      : std::runtime_error(step < 0 ? what : what + " (step " + std::to_string(step) + ")"),
        step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

// Incompatible tensor shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input files, inconsistent manifests, empty splits.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/Inf in a forward pass or a diverging optimization.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes a warning line to stderr unless warnings are silenced.
void warn(const std::string& message);
void set_warnings_enabled(bool enabled);

}  // namespace slung

#endif  // SLUNG_ERRORS_HPP_
