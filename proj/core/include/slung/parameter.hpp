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

#ifndef SLUNG_PARAMETER_HPP_
#define SLUNG_PARAMETER_HPP_

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "slung/tensor.hpp"

namespace slung {

// A named tensor with a persistent gradient slot. Non-trainable entries are
// fixed buffers (e.g. normalization statistics) that still live in checkpoints.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  void zero_grad();
};

// Owns parameters in registration order; names are unique. References handed
// out stay valid for the lifetime of the store.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore& other);
  ParameterStore& operator=(const ParameterStore& other);
  ParameterStore(ParameterStore&&) noexcept = default;
  ParameterStore& operator=(ParameterStore&&) noexcept = default;

  // Throws std::invalid_argument on a duplicate name.
  Parameter& add(const std::string& name, Tensor value, bool trainable = true);

  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  // Number of scalars, trainable entries only by default.
  std::size_t scalar_count(bool trainable_only = true) const;
  void zero_grad();

  // Copies values for every name present in both stores; shapes must match.
  void assign_values(const ParameterStore& other);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace slung

#endif  // SLUNG_PARAMETER_HPP_
