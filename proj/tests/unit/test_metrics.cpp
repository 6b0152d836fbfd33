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
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "perimid/errors.hpp"
#include "perimid/metrics.hpp"

using namespace perimid;

namespace {

using Flags = std::vector<std::uint8_t>;

Flags flags(const std::string& bits) {
  Flags out;
  for (char c : bits) out.push_back(c == '1' ? 1 : 0);
  return out;
}

std::vector<double> random_values(std::size_t n, oracle::Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> out(n);
  for (double& v : out) v = u(rng);
  return out;
}

}  // namespace

TEST_CASE("mse and mae examples") {
  const Tensor truth({2, 1}, {0.0, 0.0});
  const Tensor pred({2, 1}, {1.0, -1.0});
  const ErrorPair e = mse_mae(truth, pred);
  CHECK(e.mse == 1.0);
  CHECK(e.mae == 1.0);
  const ErrorPair z = mse_mae(pred, pred);
  CHECK(z.mse == 0.0);
  CHECK(z.mae == 0.0);
  CHECK_THROWS_AS(mse_mae(truth, Tensor({1, 2})), ShapeError);

  oracle::Rng rng(61);
  const Tensor a = oracle::random_tensor(5, 2, rng);
  const Tensor b = oracle::random_tensor(5, 2, rng);
  long double se = 0.0L, ae = 0.0L;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const long double d = static_cast<long double>(a(i, j)) - b(i, j);
      se += d * d;
      ae += std::fabs(d);
    }
  }
  const ErrorPair r = mse_mae(a, b);
  CHECK(std::abs(r.mse - static_cast<double>(se / 10)) < 1e-12);
  CHECK(std::abs(r.mae - static_cast<double>(ae / 10)) < 1e-12);
}

TEST_CASE("forecast accuracy examples") {
  const std::vector<double> ten{10.0}, thirty{30.0};
  CHECK(smape(ten, thirty) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(mape(ten, thirty) == doctest::Approx(200.0).epsilon(1e-14));

  const std::vector<double> insample{1.0, 3.0, 2.0, 5.0, 4.0, 6.0};
  const std::vector<double> truth{7.0, 5.0, 8.0};
  const ForecastAccuracy perfect = smape_mape_mase_owa(truth, truth, insample, 2);
  CHECK(perfect.smape == 0.0);
  CHECK(perfect.mase == 0.0);
  CHECK(perfect.owa == 0.0);

  const std::vector<double> pred{6.0, 6.5, 7.0};
  const ForecastAccuracy self = smape_mape_mase_owa(truth, pred, insample, 2, pred);
  CHECK(std::abs(self.owa - 1.0) < 1e-12);

  // scale: |2-1|,|5-3|,|4-2|,|6-5| over 4 -> 1.5; error mean (1+1.5+1)/3
  CHECK(std::abs(mase(truth, pred, insample, 2) - (3.5 / 3.0) / 1.5) < 1e-12);
  CHECK(seasonal_naive(insample, 2, 5) == std::vector<double>{4.0, 6.0, 4.0, 6.0, 4.0});

  const std::vector<double> flat{2.0, 2.0, 2.0, 2.0};
  CHECK_THROWS_AS(mase(truth, pred, flat, 1), NumericError);
  CHECK_THROWS_AS(mase(truth, pred, insample, 0), Error);
  CHECK_THROWS_AS(smape(truth, ten), ShapeError);

  const std::vector<double> zeros{0.0, 0.0};
  CHECK(smape(zeros, zeros) == 0.0);
}

TEST_CASE("forecast accuracy matches the direct formulas") {
  oracle::Rng rng(62);
  std::uniform_int_distribution<std::size_t> len(1, 40), season(1, 12);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t h = len(rng), q = season(rng);
    const auto insample = random_values(q + len(rng) + 1, rng, -5.0, 5.0);
    const auto truth = random_values(h, rng, -5.0, 5.0);
    const auto pred = random_values(h, rng, -5.0, 5.0);
    CHECK(std::abs(smape(truth, pred) - oracle::smape(truth, pred)) < 1e-12);
    CHECK(std::abs(mase(truth, pred, insample, q) - oracle::mase(truth, pred, insample, q)) <
          1e-12 * std::max(1.0, oracle::mase(truth, pred, insample, q)));
  }
}

TEST_CASE("forecast accuracy properties") {
  oracle::Rng rng(63);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int trial = 0; trial < 300; ++trial) {
    const auto insample = random_values(20, rng, -3.0, 3.0);
    const auto truth = random_values(8, rng, -3.0, 3.0);
    auto pred = random_values(8, rng, -3.0, 3.0);
    const double s = smape(truth, pred);
    CHECK(s >= 0.0);
    CHECK(s <= 200.0);
    CHECK(mape(truth, pred) >= 0.0);
    const double m = mase(truth, pred, insample, 4);
    CHECK(m >= 0.0);

    const double c = scale(rng);
    auto times = [c](std::vector<double> v) {
      for (double& x : v) x *= c;
      return v;
    };
    CHECK(std::abs(mase(times(truth), times(pred), times(insample), 4) - m) < 1e-12 * std::max(1.0, m));

    std::vector<std::size_t> order(8);
    for (std::size_t i = 0; i < 8; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> t2(8), p2(8);
    for (std::size_t i = 0; i < 8; ++i) {
      t2[i] = truth[order[i]];
      p2[i] = pred[order[i]];
    }
    CHECK(std::abs(smape(t2, p2) - s) < 1e-12);
    CHECK(std::abs(mase(t2, p2, insample, 4) - m) < 1e-12 * std::max(1.0, m));
  }
}

TEST_CASE("point adjustment examples") {
  const Flags truth = flags("000111000");
  CHECK(point_adjust(truth, flags("000010000")) == truth);
  const DetectionScores hit = point_adjust_f1(truth, flags("000010000"));
  CHECK(hit.precision == 1.0);
  CHECK(hit.recall == 1.0);
  CHECK(hit.f1 == 1.0);

  const DetectionScores none = point_adjust_f1(truth, flags("000000000"));
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);

  const DetectionScores false_pos = point_adjust_f1(flags("000"), flags("010"));
  CHECK(false_pos.precision == 0.0);
  CHECK(false_pos.recall == 0.0);
  CHECK(false_pos.f1 == 0.0);

  // a hit in one segment leaves the other segment alone
  CHECK(point_adjust(flags("1100111"), flags("0100000")) == flags("1100000"));
  CHECK(point_adjust(flags("0111"), flags("0001")) == flags("0111"));
  CHECK_THROWS_AS(point_adjust(flags("01"), flags("011")), ShapeError);
}

TEST_CASE("point adjustment matches the oracle and never lowers recall") {
  oracle::Rng rng(64);
  std::uniform_int_distribution<std::size_t> len(1, 300);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = len(rng);
    const double p_start = u(rng) * 0.2, p_stay = u(rng), p_raw = u(rng) * 0.3;
    Flags truth(n), raw(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = (i > 0 && truth[i - 1]) ? u(rng) < p_stay : u(rng) < p_start;
      raw[i] = u(rng) < p_raw;
    }
    const DetectionScores plain = detection_scores(truth, raw);
    const DetectionScores adjusted = point_adjust_f1(truth, raw);
    const oracle::Prf want_plain = oracle::pointwise(truth, raw);
    const oracle::Prf want = oracle::point_adjusted(truth, raw);
    CHECK(std::abs(plain.f1 - want_plain.f1) < 1e-12);
    CHECK(std::abs(adjusted.precision - want.precision) < 1e-12);
    CHECK(std::abs(adjusted.recall - want.recall) < 1e-12);
    CHECK(std::abs(adjusted.f1 - want.f1) < 1e-12);
    CHECK(adjusted.recall >= plain.recall);
    CHECK(adjusted.f1 >= plain.f1);
    if (plain.precision + plain.recall > 0) {
      CHECK(std::abs(plain.f1 - 2 * plain.precision * plain.recall /
                                    (plain.precision + plain.recall)) < 1e-15);
    }
  }
}

TEST_CASE("accuracy and quantile") {
  const std::vector<std::size_t> truth{0, 1, 2, 1}, pred{0, 1, 1, 1};
  CHECK(accuracy(truth, pred) == 0.75);
  CHECK(quantile({3.0, 1.0, 2.0, 4.0}, 0.0) == 1.0);
  CHECK(quantile({3.0, 1.0, 2.0, 4.0}, 1.0) == 4.0);
  CHECK(quantile({3.0, 1.0, 2.0, 4.0}, 0.5) == 2.5);
  CHECK(quantile({0.0, 10.0}, 0.99) == doctest::Approx(9.9));
  CHECK_THROWS_AS(quantile({1.0}, 1.5), Error);
  CHECK_THROWS_AS(quantile({}, 0.5), Error);
}

TEST_CASE("metric report JSON") {
  MetricReport report("forecast");
  report.set("mse", 0.25).set("mae", 0.5).count("windows", 12);
  const nlohmann::json j = report.to_json();
  CHECK(j.at("task") == "forecast");
  CHECK(j.at("metrics").at("mse") == 0.25);
  CHECK(j.at("counts").at("windows") == 12);
  CHECK(j.size() == 3);
  const MetricReport back = MetricReport::from_json(j);
  CHECK(back.to_json() == j);
  CHECK(back.metric("mae") == 0.5);
  CHECK_THROWS_AS(report.set("bad", std::nan("")), NumericError);
  CHECK_THROWS_AS(report.set("bad", INFINITY), NumericError);
  CHECK_THROWS(report.metric("missing"));
}
