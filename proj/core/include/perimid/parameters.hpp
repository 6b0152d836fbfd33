// Copyright 2026 The Perimid Authors
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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "perimid/autodiff.hpp"
#include "perimid/tensor.hpp"

namespace perimid {

using ParamId = std::size_t;
using Rng = std::mt19937_64;

/// Marks an optional parameter block that was not created.
inline constexpr ParamId kNoParam = static_cast<ParamId>(-1);

/// U(-bound, bound) initialization.
Tensor uniform_init(Shape shape, double bound, Rng& rng);
/// N(0, stddev) initialization.
Tensor normal_init(Shape shape, double stddev, Rng& rng);

struct Parameter {
  std::string name;
  Tensor value;
};

/// Owns every learned block of a model in declaration order. Modules keep
/// ParamId handles into the store.
class ParameterStore {
 public:
  ParamId add(std::string name, Tensor init);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](ParamId id) { return params_.at(id); }
  const Parameter& operator[](ParamId id) const { return params_.at(id); }
  Tensor& value(ParamId id) { return params_.at(id).value; }
  const Tensor& value(ParamId id) const { return params_.at(id).value; }

  std::span<Parameter> all() { return params_; }
  std::span<const Parameter> all() const { return params_; }
  std::size_t scalar_count() const;

 private:
  std::vector<Parameter> params_;
};

/// A ParameterStore bound to a tape as leaves.
class Binding {
 public:
  Binding(Tape& tape, const ParameterStore& store, bool trainable);

  Var operator[](ParamId id) const { return vars_.at(id); }
  Tape& tape() const { return *tape_; }
  bool trainable() const { return trainable_; }

  /// Gradient per block after tape.backward(); zeros for unreached blocks.
  std::vector<Tensor> gradients() const;

 private:
  Tape* tape_;
  std::vector<Var> vars_;
  bool trainable_;
};

}  // namespace perimid
