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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "perimid/autodiff.hpp"
#include "perimid/parameters.hpp"
#include "perimid/pyramid.hpp"

namespace perimid {

inline constexpr std::size_t kDefaultMaxFlows = 4096;

/// One root-to-leaf branch through the pyramid: a token index per level,
/// consecutive entries overlapping in time.
struct FeatureFlow {
  std::vector<std::size_t> path;

  friend bool operator==(const FeatureFlow&, const FeatureFlow&) = default;
};

/// Number of root-to-leaf paths, by dynamic programming over levels.
std::size_t count_flows(const InclusionRelation& relation, const PyramidLayout& layout);

/// All root-to-leaf paths in lexicographic slot order. Throws ConfigError
/// when there are more than max_flows of them; lower k in that case.
std::vector<FeatureFlow> enumerate_flows(const InclusionRelation& relation,
                                         const PyramidLayout& layout,
                                         std::size_t max_flows = kDefaultMaxFlows);

nlohmann::json to_json(std::span<const FeatureFlow> flows);

/// Concatenates the k encoded tokens of each flow, maps them with one shared
/// linear layer (k * d_model -> T) and averages over flows.
class FlowHead {
 public:
  FlowHead() = default;
  FlowHead(ParameterStore& store, std::size_t levels, std::size_t d_model, std::size_t target_len,
           Rng& rng);

  /// encoded: N x d_model. Returns 1 x T.
  Var aggregate(const Binding& bound, const Var& encoded, std::span<const FeatureFlow> flows) const;

  ParamId weight() const { return weight_; }
  ParamId bias() const { return bias_; }

 private:
  ParamId weight_ = 0;
  ParamId bias_ = 0;
  std::size_t levels_ = 0;
  std::size_t d_model_ = 0;
};

}  // namespace perimid
