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

#include <cmath>

#include "oracles.hpp"
#include "perimid/errors.hpp"
#include "perimid/preprocessing.hpp"

using namespace perimid;

namespace {

Tensor column(std::initializer_list<double> v) {
  return Tensor({v.size(), 1}, std::vector<double>(v));
}

}  // namespace

TEST_CASE("normalize examples") {
  const NormalizedSeries c = normalize(column({5, 5, 5, 5}));
  for (double x : c.values.data()) CHECK(x == 0.0);
  CHECK(c.stats.sigma[0] == kSigmaFloor);
  CHECK(c.stats.mu[0] == 5.0);

  const NormalizedSeries two = normalize(column({1, 3}));
  CHECK(two.values[0] == doctest::Approx(-1.0));
  CHECK(two.values[1] == doctest::Approx(1.0));
  CHECK(two.stats.mu[0] == 2.0);
  CHECK(two.stats.sigma[0] == doctest::Approx(1.0));

  CHECK_THROWS_AS(normalize(column({1})), ShapeError);
}

TEST_CASE("normalize gives zero mean and unit variance") {
  oracle::Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor x = oracle::random_tensor(40, 3, rng, -10, 10);
    const NormalizedSeries n = normalize(x);
    for (std::size_t c = 0; c < 3; ++c) {
      double mean = 0, var = 0;
      for (std::size_t t = 0; t < 40; ++t) mean += n.values(t, c) / 40.0;
      for (std::size_t t = 0; t < 40; ++t) var += (n.values(t, c) - mean) * (n.values(t, c) - mean) / 40.0;
      CHECK(std::abs(mean) < 1e-9);
      CHECK(std::abs(var - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("denormalize examples") {
  NormStats stats{{1.5, -2.0}, {3.0, 0.5}};
  const Tensor zero({4, 2});
  const Tensor mu = denormalize(zero, stats);
  for (std::size_t t = 0; t < 4; ++t) {
    CHECK(mu(t, 0) == 1.5);
    CHECK(mu(t, 1) == -2.0);
  }
  oracle::Rng rng(12);
  const Tensor y = oracle::random_tensor(5, 2, rng);
  CHECK(denormalize(y, NormStats{{0, 0}, {1, 1}}) == y);
  CHECK_THROWS_AS(denormalize(oracle::random_tensor(5, 3, rng), stats), ShapeError);

  const Tensor x = oracle::random_tensor(32, 3, rng, -5, 5);
  const NormalizedSeries n = normalize(x);
  CHECK(max_abs_diff(denormalize(n.values, n.stats), x) < 1e-9);
}

TEST_CASE("normalize round trip across channel scales") {
  oracle::Rng rng(13);
  std::uniform_real_distribution<double> log_scale(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    Tensor x = oracle::random_tensor(24, 2, rng);
    for (std::size_t c = 0; c < 2; ++c) {
      const double s = std::pow(10.0, log_scale(rng));
      for (std::size_t t = 0; t < 24; ++t) x(t, c) = x(t, c) * s + 7.0;
    }
    const NormalizedSeries n = normalize(x);
    CHECK(max_abs_diff(denormalize(n.values, n.stats), x) < 1e-9);
  }
}

TEST_CASE("decompose examples") {
  const Tensor constant({10, 2}, 4.25);
  for (std::size_t kernel : {1u, 3u, 7u, 19u}) {
    const DecompositionResult d = decompose(constant, kernel);
    CHECK(max_abs_diff(d.trend, constant) < 1e-12);
    for (double s : d.seasonal.data()) CHECK(std::abs(s) < 1e-12);
  }

  const DecompositionResult d = decompose(column({1, 2, 3, 4, 5}), 3);
  const double expected[] = {4.0 / 3.0, 2, 3, 4, 14.0 / 3.0};
  for (std::size_t t = 0; t < 5; ++t) {
    CHECK(d.trend[t] == doctest::Approx(expected[t]).epsilon(1e-14));
    CHECK(d.seasonal[t] == doctest::Approx(static_cast<double>(t + 1) - expected[t]));
  }

  Tensor ramp({12, 1});
  for (std::size_t t = 0; t < 12; ++t) ramp[t] = 0.5 * static_cast<double>(t) - 1.0;
  const DecompositionResult r = decompose(ramp, 3);
  for (std::size_t t = 1; t + 1 < 12; ++t) CHECK(std::abs(r.trend[t] - ramp[t]) < 1e-12);

  CHECK_THROWS_AS(decompose(ramp, 4), ConfigError);
  CHECK_THROWS_AS(decompose(ramp, 25), ConfigError);
  CHECK_NOTHROW(decompose(ramp, 23));
}

TEST_CASE("decompose matches the moving-average oracle and reconstructs") {
  oracle::Rng rng(14);
  std::uniform_int_distribution<std::size_t> len(2, 60);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t L = len(rng);
    std::uniform_int_distribution<std::size_t> half(0, L - 1);
    const std::size_t kernel = 2 * half(rng) + 1;
    const Tensor x = oracle::random_tensor(L, 2, rng, -100, 100);
    const DecompositionResult d = decompose(x, kernel);
    CHECK(max_abs_diff(d.trend, oracle::moving_average(x, kernel)) < 1e-10);
    Tensor sum = d.seasonal;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += d.trend[i];
    CHECK(max_abs_diff(sum, x) <= 1e-12);
  }
}

TEST_CASE("pre_interpolate examples") {
  MissingMask m(3, 1);
  m.set(1, 0, true);
  CHECK(pre_interpolate(column({1, 0, 3}), m) == column({1, 2, 3}));

  MissingMask front(3, 1);
  front.set(0, 0, true);
  CHECK(pre_interpolate(column({0, 7, 7}), front) == column({7, 7, 7}));

  MissingMask gap(4, 1);
  gap.set(1, 0, true);
  gap.set(2, 0, true);
  CHECK(pre_interpolate(column({4, -1, -1, 8}), gap) == column({4, 6, 6, 8}));

  MissingMask all(3, 1, true);
  CHECK_THROWS_AS(pre_interpolate(column({1, 2, 3}), all), DataError);
}

TEST_CASE("pre_interpolate is idempotent and keeps observed points") {
  oracle::Rng rng(15);
  std::bernoulli_distribution missing(0.4);
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor x = oracle::random_tensor(20, 3, rng);
    MissingMask mask(20, 3);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t t = 0; t < 20; ++t) mask.set(t, c, missing(rng));
      mask.set(trial % 20, c, false);
    }
    const Tensor once = pre_interpolate(x, mask);
    CHECK(pre_interpolate(once, mask) == once);
    for (std::size_t t = 0; t < 20; ++t) {
      for (std::size_t c = 0; c < 3; ++c) {
        if (!mask(t, c)) CHECK(once(t, c) == x(t, c));
      }
    }
  }
}

TEST_CASE("missing mask bookkeeping") {
  MissingMask m(4, 2);
  m.set(0, 1, true);
  m.set(3, 1, true);
  CHECK(m.missing_count() == 2);
  CHECK(m.missing_count(0) == 0);
  CHECK(m.missing_count(1) == 2);
  const Tensor w = m.as_weights();
  CHECK(w(0, 1) == 1.0);
  CHECK(w(0, 0) == 0.0);
}
