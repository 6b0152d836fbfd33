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

#include "perimid/flows.hpp"

#include <cmath>

#include "perimid/errors.hpp"

namespace perimid {

std::size_t count_flows(const InclusionRelation& relation, const PyramidLayout& layout) {
  // paths[t] = number of branches from the root that end at token t.
  std::vector<std::size_t> paths(layout.token_count(), 0);
  paths[0] = 1;
  for (std::size_t t = 1; t < layout.token_count(); ++t) {
    for (std::size_t p : relation.parents(t)) paths[t] += paths[p];
  }
  std::size_t total = 0;
  const std::size_t last = layout.levels() - 1;
  for (std::size_t t = layout.level_offset(last); t < layout.token_count(); ++t) total += paths[t];
  return total;
}

std::vector<FeatureFlow> enumerate_flows(const InclusionRelation& relation,
                                         const PyramidLayout& layout, std::size_t max_flows) {
  const std::size_t total = count_flows(relation, layout);
  if (total > max_flows) {
    throw ConfigError("enumerate_flows: pyramid has " + std::to_string(total) +
                      " feature flows, limit is " + std::to_string(max_flows) + "; lower k");
  }
  std::vector<FeatureFlow> flows;
  flows.reserve(total);
  const std::size_t depth = layout.levels();
  std::vector<std::size_t> path{0};
  // Iterative DFS; cursor[d] is the next child to visit at depth d.
  std::vector<std::size_t> cursor(depth, 0);
  while (!path.empty()) {
    const std::size_t d = path.size() - 1;
    if (d == depth - 1) {
      flows.push_back({path});
      path.pop_back();
      continue;
    }
    const auto& kids = relation.children(path.back());
    if (cursor[d] < kids.size()) {
      path.push_back(kids[cursor[d]++]);
      cursor[d + 1] = 0;
    } else {
      cursor[d] = 0;
      path.pop_back();
    }
  }
  return flows;
}

nlohmann::json to_json(std::span<const FeatureFlow> flows) {
  nlohmann::json out = nlohmann::json::array();
  for (const FeatureFlow& f : flows) out.push_back(f.path);
  return out;
}

FlowHead::FlowHead(ParameterStore& store, std::size_t levels, std::size_t d_model,
                   std::size_t target_len, Rng& rng)
    : levels_(levels), d_model_(d_model) {
  const std::size_t fan_in = levels * d_model;
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  weight_ = store.add("flows.weight", uniform_init({fan_in, target_len}, bound, rng));
  bias_ = store.add("flows.bias", uniform_init({1, target_len}, bound, rng));
}

Var FlowHead::aggregate(const Binding& bound, const Var& encoded,
                        std::span<const FeatureFlow> flows) const {
  if (flows.empty()) throw ConfigError("aggregate_flows: no feature flows");
  if (encoded.cols() != d_model_) throw ShapeError("aggregate_flows: token width mismatch");
  std::vector<std::vector<std::size_t>> index;
  index.reserve(flows.size());
  for (const FeatureFlow& f : flows) {
    if (f.path.size() != levels_) {
      throw ShapeError("aggregate_flows: flow has " + std::to_string(f.path.size()) +
                       " components, head expects " + std::to_string(levels_));
    }
    index.push_back(f.path);
  }
  const Var stacked = gather_concat_rows(encoded, index);
  const Var projected = add_row(matmul(stacked, bound[weight_]), bound[bias_]);
  return mean_rows(projected);
}

}  // namespace perimid
