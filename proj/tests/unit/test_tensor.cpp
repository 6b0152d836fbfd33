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
#include "perimid/tensor.hpp"

using namespace perimid;

TEST_CASE("matmul examples") {
  const Tensor id = Tensor::matrix({{1, 0}, {0, 1}});
  const Tensor v = Tensor::matrix({{3}, {4}});
  CHECK(matmul(id, v) == v);
  CHECK(matmul(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::matrix({{5}, {6}})) ==
        Tensor::matrix({{17}, {39}}));
  const Tensor zero({3, 2});
  oracle::Rng rng(1);
  const Tensor any = oracle::random_tensor(2, 5, rng);
  const Tensor prod = matmul(zero, any);
  CHECK(prod.shape() == Shape{3, 5});
  for (double x : prod.data()) CHECK(x == 0.0);
  CHECK_THROWS_AS(matmul(Tensor({2, 3}), Tensor({2, 3})), ShapeError);
}

TEST_CASE("matmul is associative on random 4x4 chains") {
  oracle::Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor a = oracle::random_tensor(4, 4, rng);
    const Tensor b = oracle::random_tensor(4, 4, rng);
    const Tensor c = oracle::random_tensor(4, 4, rng);
    CHECK(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) < 1e-10);
  }
}

TEST_CASE("softmax examples") {
  const Tensor u = softmax_lastdim(Tensor::matrix({{0, 0, 0}}));
  for (double x : u.data()) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const Tensor s = softmax_lastdim(Tensor::matrix({{1000, 0}}));
  CHECK(s.all_finite());
  CHECK(s[0] == doctest::Approx(1.0));
  CHECK(s[1] < 1e-300);

  const Tensor r = softmax_lastdim(Tensor::matrix({{std::log(1.0), std::log(2.0), std::log(3.0)}}));
  CHECK(std::abs(r[0] - 1.0 / 6.0) < 1e-15);
  CHECK(std::abs(r[1] - 2.0 / 6.0) < 1e-15);
  CHECK(std::abs(r[2] - 3.0 / 6.0) < 1e-15);
}

TEST_CASE("softmax rows sum to one for large inputs") {
  oracle::Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor x = oracle::random_tensor(5, 7, rng, -1e4, 1e4);
    const Tensor y = softmax_lastdim(x);
    for (std::size_t r = 0; r < 5; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < 7; ++c) {
        CHECK(y(r, c) >= 0.0);
        sum += y(r, c);
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("softmax over higher rank uses the last axis") {
  Tensor x({2, 2, 3});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i % 3);
  const Tensor y = softmax_lastdim(x);
  CHECK(y.shape() == x.shape());
  for (std::size_t row = 0; row < 4; ++row) {
    CHECK(y[row * 3] + y[row * 3 + 1] + y[row * 3 + 2] == doctest::Approx(1.0));
  }
}

TEST_CASE("tensor construction invariants") {
  CHECK_THROWS_AS(Tensor(Shape{2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.reshaped({3, 2}).shape() == Shape{3, 2});
  CHECK_THROWS_AS(t.reshaped({4, 2}), ShapeError);
  t[4] = std::nan("");
  CHECK_FALSE(t.all_finite());
  CHECK_THROWS_AS(require_finite(t, "t"), NumericError);
}

TEST_CASE("transpose swaps axes") {
  const Tensor a = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  CHECK(transpose(a) == Tensor::matrix({{1, 4}, {2, 5}, {3, 6}}));
}
