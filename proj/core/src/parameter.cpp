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

#include "slung/parameter.hpp"

#include <stdexcept>

#include "slung/errors.hpp"

namespace slung {

void Parameter::zero_grad() {
  if (!grad.same_shape(value)) {
    grad = Tensor(value.shape());
  } else {
    grad.fill(0.0);
  }
}

ParameterStore::ParameterStore(const ParameterStore& other) { *this = other; }

ParameterStore& ParameterStore::operator=(const ParameterStore& other) {
  if (this == &other) return *this;
  params_.clear();
  index_.clear();
  for (const auto& p : other.params_) {
    params_.push_back(std::make_unique<Parameter>(*p));
    index_.emplace(p->name, params_.size() - 1);
  }
  return *this;
}

Parameter& ParameterStore::add(const std::string& name, Tensor value, bool trainable) {
  if (index_.contains(name)) {
    throw std::invalid_argument("duplicate parameter name '" + name + "'");
  }
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->grad = Tensor(value.shape());
  p->value = std::move(value);
  p->trainable = trainable;
  params_.push_back(std::move(p));
  index_.emplace(name, params_.size() - 1);
  return *params_.back();
}

Parameter* ParameterStore::find(std::string_view name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

const Parameter* ParameterStore::find(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

Parameter& ParameterStore::at(std::string_view name) {
  if (Parameter* p = find(name)) return *p;
  throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
}

const Parameter& ParameterStore::at(std::string_view name) const {
  if (const Parameter* p = find(name)) return *p;
  throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
}

std::size_t ParameterStore::scalar_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (!trainable_only || p->trainable) n += p->value.size();
  }
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

void ParameterStore::assign_values(const ParameterStore& other) {
  for (auto& p : params_) {
    const Parameter* src = other.find(p->name);
    if (src == nullptr) continue;
    if (!src->value.same_shape(p->value)) {
      throw ShapeError("parameter '" + p->name + "' shape " + p->value.shape_string() +
                       " vs " + src->value.shape_string());
    }
    p->value = src->value;
  }
}

}  // namespace slung
