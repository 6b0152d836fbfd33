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

#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"
#include "perimid/errors.hpp"
#include "perimid/flows.hpp"
#include "perimid/gradcheck.hpp"

using namespace perimid;

namespace {

std::vector<FeatureFlow> flows_for(std::vector<std::size_t> freqs, std::size_t L) {
  const PeriodicPyramid p = build_pyramid(period_set_from_frequencies(freqs, L));
  return enumerate_flows(p.relation, p.layout);
}

}  // namespace

TEST_CASE("flow enumeration examples") {
  const auto a = flows_for({1, 2, 4}, 12);
  REQUIRE(a.size() == 4);
  CHECK(a[0].path == std::vector<std::size_t>{0, 1, 3});
  CHECK(a[1].path == std::vector<std::size_t>{0, 1, 4});
  CHECK(a[2].path == std::vector<std::size_t>{0, 2, 5});
  CHECK(a[3].path == std::vector<std::size_t>{0, 2, 6});

  // Periods 10, 5, 4: leaf [4,8) straddles both middle components.
  const auto b = flows_for({1, 2, 3}, 10);
  CHECK(b.size() == 4);
  const PeriodicPyramid pb = build_pyramid(period_set_from_frequencies({1, 2, 3}, 10));
  const std::size_t straddle = pb.layout.token(2, 1);
  CHECK(std::count_if(b.begin(), b.end(), [&](const FeatureFlow& f) { return f.path[2] == straddle; }) == 2);

  // L=20: periods 10, 7, 3 leave 2, 3, 7 leaves
  for (std::size_t f : {2u, 3u, 7u}) CHECK(flows_for({1, f}, 20).size() == f);
}

TEST_CASE("flow counts match the path-count oracle") {
  oracle::Rng rng(41);
  std::uniform_int_distribution<std::size_t> len(8, 128);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t L = len(rng);
    const std::size_t k = 2 + static_cast<std::size_t>(trial % 3);
    const PeriodSet ps = oracle::random_period_set(L, k, rng);
    const PeriodicPyramid p = build_pyramid(ps);
    const auto flows = enumerate_flows(p.relation, p.layout);
    CHECK(flows.size() == oracle::path_count(L, ps.periods));
    CHECK(count_flows(p.relation, p.layout) == flows.size());
    CHECK(std::is_sorted(flows.begin(), flows.end(),
                         [](const FeatureFlow& x, const FeatureFlow& y) { return x.path < y.path; }));
    for (const FeatureFlow& f : flows) {
      REQUIRE(f.path.size() == k);
      CHECK(f.path[0] == 0);
      for (std::size_t l = 1; l < k; ++l) {
        CHECK(p.layout[f.path[l]].level == l);
        CHECK(p.layout[f.path[l]].overlaps(p.layout[f.path[l - 1]]));
      }
    }
  }
}

TEST_CASE("flow limit is a configuration error") {
  const PeriodicPyramid p = build_pyramid(period_set_from_frequencies({1, 2, 4}, 12));
  CHECK_THROWS_AS(enumerate_flows(p.relation, p.layout, 3), ConfigError);
  CHECK(enumerate_flows(p.relation, p.layout, 4).size() == 4);
}

TEST_CASE("flow head aggregation") {
  Rng rng(42);
  ParameterStore store;
  const FlowHead head(store, 3, 4, 5, rng);
  oracle::Rng orng(43);
  const Tensor encoded = oracle::random_tensor(7, 4, orng);
  const auto flows = flows_for({1, 2, 4}, 12);

  const auto project = [&](const FeatureFlow& f) {
    Tensor row({1, 12});
    for (std::size_t l = 0; l < 3; ++l) {
      for (std::size_t c = 0; c < 4; ++c) row(0, l * 4 + c) = encoded(f.path[l], c);
    }
    Tensor y = matmul(row, store.value(head.weight()));
    for (std::size_t t = 0; t < 5; ++t) y(0, t) += store.value(head.bias())(0, t);
    return y;
  };

  Tape tape;
  const Binding b(tape, store, false);
  const Var enc = tape.constant(encoded);

  SUBCASE("single flow is its own projection") {
    const Tensor y = head.aggregate(b, enc, std::vector<FeatureFlow>{flows[2]}).value();
    CHECK(max_abs_diff(y, project(flows[2])) < 1e-12);
  }
  SUBCASE("mean of all flows") {
    Tensor want({1, 5});
    for (const FeatureFlow& f : flows) {
      const Tensor y = project(f);
      for (std::size_t t = 0; t < 5; ++t) want(0, t) += y(0, t) / 4.0;
    }
    CHECK(max_abs_diff(head.aggregate(b, enc, flows).value(), want) < 1e-12);
  }
  SUBCASE("order of flows does not matter") {
    auto reversed = flows;
    std::reverse(reversed.begin(), reversed.end());
    const Tensor forward = head.aggregate(b, enc, flows).value();
    const Tensor backward = head.aggregate(b, enc, reversed).value();
    CHECK(max_abs_diff(forward, backward) < 1e-14);
  }
  SUBCASE("identical flow embeddings") {
    const Var same = tape.constant(Tensor({7, 4}, 0.3));
    const Tensor all = head.aggregate(b, same, flows).value();
    const Tensor one = head.aggregate(b, same, std::vector<FeatureFlow>{flows[0]}).value();
    CHECK(max_abs_diff(all, one) < 1e-14);
  }
  SUBCASE("zero weights return the bias") {
    store.value(head.weight()).fill(0.0);
    Tape t2;
    const Binding b2(t2, store, false);
    CHECK(head.aggregate(b2, t2.constant(encoded), flows).value() == store.value(head.bias()));
  }
  SUBCASE("empty flow list") {
    CHECK_THROWS_AS(head.aggregate(b, enc, std::vector<FeatureFlow>{}), ConfigError);
  }
}

TEST_CASE("flow head gradients") {
  Rng rng(44);
  ParameterStore store;
  const FlowHead head(store, 3, 4, 5, rng);
  oracle::Rng orng(45);
  const ParamId enc = store.add("encoded", oracle::random_tensor(7, 4, orng));
  const Tensor target = oracle::random_tensor(1, 5, orng);
  const auto flows = flows_for({1, 2, 4}, 12);
  const auto report = grad_check(
      [&](const Binding& b) { return mse_loss(head.aggregate(b, b[enc], flows), target); }, store);
  CHECK(report.max_relative_error < 1e-3);
}

TEST_CASE("flows serialize as token paths") {
  const auto j = to_json(flows_for({1, 2}, 8));
  CHECK(j.size() == 2);
  CHECK(j[1][1] == 2);
}
