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

#include "slung/errors.hpp"

#include <atomic>
#include <iostream>

namespace slung {

namespace {
std::atomic<bool> g_warnings_enabled{true};
}  // namespace

void warn(const std::string& message) {
  if (g_warnings_enabled.load(std::memory_order_relaxed)) {
    std::cerr << "warning: " << message << '\n';
  }
}

void set_warnings_enabled(bool enabled) {
  g_warnings_enabled.store(enabled, std::memory_order_relaxed);
}

}  // namespace slung
