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

#include "perimid/parameters.hpp"

#include "perimid/errors.hpp"

namespace perimid {

Tensor uniform_init(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

Tensor normal_init(Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

ParamId ParameterStore::add(std::string name, Tensor init) {
  require_finite(init, "parameter init");
  params_.push_back(Parameter{std::move(name), std::move(init)});
  return params_.size() - 1;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t total = 0;
  for (const Parameter& p : params_) total += p.value.size();
  return total;
}

Binding::Binding(Tape& tape, const ParameterStore& store, bool trainable)
    : tape_(&tape), trainable_(trainable) {
  vars_.reserve(store.size());
  for (const Parameter& p : store.all()) vars_.push_back(tape.leaf(p.value, trainable));
}

std::vector<Tensor> Binding::gradients() const {
  std::vector<Tensor> out;
  out.reserve(vars_.size());
  for (const Var& v : vars_) {
    const Tensor& g = v.grad();
    out.push_back(g.empty() ? Tensor(v.value().shape(), 0.0) : g);
  }
  return out;
}

}  // namespace perimid
