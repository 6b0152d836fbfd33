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

#include "perimid/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "perimid/errors.hpp"

namespace perimid {

MetricReport& MetricReport::set(const std::string& name, double value) {
  if (!std::isfinite(value)) throw NumericError("metric '" + name + "' is not finite");
  metrics_[name] = value;
  return *this;
}

MetricReport& MetricReport::count(const std::string& name, std::size_t value) {
  counts_[name] = value;
  return *this;
}

double MetricReport::metric(const std::string& name) const {
  const auto it = metrics_.find(name);
  if (it == metrics_.end()) throw Error("metric '" + name + "' not in report");
  return it->second;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [k, v] : metrics_) metrics[k] = v;
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [k, v] : counts_) counts[k] = v;
  return {{"task", task_}, {"metrics", metrics}, {"counts", counts}};
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  try {
    MetricReport r(j.at("task").get<std::string>());
    for (const auto& [k, v] : j.at("metrics").items()) r.set(k, v.get<double>());
    for (const auto& [k, v] : j.at("counts").items()) r.count(k, v.get<std::size_t>());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("metric report: ") + e.what());
  }
}

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": lengths " + std::to_string(a) + " and " +
                     std::to_string(b) + " differ");
  }
  if (a == 0) throw ShapeError(std::string(what) + ": empty input");
}

}  // namespace

ErrorPair mse_mae(std::span<const double> truth, std::span<const double> pred) {
  require_same_length(truth.size(), pred.size(), "mse_mae");
  ErrorPair out;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = pred[i] - truth[i];
    out.mse += e * e;
    out.mae += std::abs(e);
  }
  out.mse /= static_cast<double>(truth.size());
  out.mae /= static_cast<double>(truth.size());
  return out;
}

ErrorPair mse_mae(const Tensor& truth, const Tensor& pred) {
  if (truth.shape() != pred.shape()) {
    throw ShapeError("mse_mae: shapes " + to_string(truth.shape()) + " and " +
                     to_string(pred.shape()) + " differ");
  }
  return mse_mae(truth.data(), pred.data());
}

double smape(std::span<const double> truth, std::span<const double> pred) {
  require_same_length(truth.size(), pred.size(), "smape");
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double denom = std::abs(truth[i]) + std::abs(pred[i]);
    if (denom < 1e-12) continue;
    total += std::abs(truth[i] - pred[i]) / denom;
  }
  return 200.0 * total / static_cast<double>(truth.size());
}

double mape(std::span<const double> truth, std::span<const double> pred) {
  require_same_length(truth.size(), pred.size(), "mape");
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (std::abs(truth[i]) < 1e-12) continue;
    total += std::abs(truth[i] - pred[i]) / std::abs(truth[i]);
  }
  return 100.0 * total / static_cast<double>(truth.size());
}

double mase(std::span<const double> truth, std::span<const double> pred,
            std::span<const double> insample, std::size_t q) {
  require_same_length(truth.size(), pred.size(), "mase");
  if (q == 0) throw ConfigError("mase: seasonality q must be at least 1");
  if (insample.size() <= q) {
    throw ShapeError("mase: in-sample length must exceed q=" + std::to_string(q));
  }
  double scale = 0.0;
  for (std::size_t j = q; j < insample.size(); ++j) scale += std::abs(insample[j] - insample[j - q]);
  scale /= static_cast<double>(insample.size() - q);
  if (scale == 0.0) {
    throw NumericError("mase: in-sample seasonal-naive error is zero (constant seasonal history)");
  }
  double err = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) err += std::abs(truth[i] - pred[i]);
  return err / static_cast<double>(truth.size()) / scale;
}

std::vector<double> seasonal_naive(std::span<const double> insample, std::size_t q,
                                   std::size_t horizon) {
  if (q == 0 || insample.size() < q) throw ShapeError("seasonal_naive: need at least q values");
  std::vector<double> out(horizon);
  const std::size_t base = insample.size() - q;
  for (std::size_t h = 0; h < horizon; ++h) out[h] = insample[base + h % q];
  return out;
}

ForecastAccuracy smape_mape_mase_owa(std::span<const double> truth, std::span<const double> pred,
                                     std::span<const double> insample, std::size_t q,
                                     std::span<const double> naive2) {
  std::vector<double> fallback;
  if (naive2.empty()) {
    fallback = seasonal_naive(insample, q, truth.size());
    naive2 = fallback;
  }
  require_same_length(pred.size(), naive2.size(), "owa naive2");
  ForecastAccuracy out;
  out.smape = smape(truth, pred);
  out.mape = mape(truth, pred);
  out.mase = mase(truth, pred, insample, q);
  const double smape_ref = smape(truth, naive2);
  const double mase_ref = mase(truth, naive2, insample, q);
  if (smape_ref == 0.0 || mase_ref == 0.0) {
    throw NumericError("owa: the reference forecast is perfect, ratios are undefined");
  }
  out.owa = 0.5 * (out.smape / smape_ref + out.mase / mase_ref);
  return out;
}

DetectionScores detection_scores(std::span<const std::uint8_t> truth,
                                 std::span<const std::uint8_t> pred) {
  if (truth.size() != pred.size()) throw ShapeError("detection_scores: length mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] != 0, p = pred[i] != 0;
    tp += t && p;
    fp += !t && p;
    fn += t && !p;
  }
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  DetectionScores s;
  s.precision = ratio(tp, tp + fp);
  s.recall = ratio(tp, tp + fn);
  const double sum = s.precision + s.recall;
  s.f1 = sum == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / sum;
  return s;
}

std::vector<std::uint8_t> point_adjust(std::span<const std::uint8_t> truth,
                                       std::span<const std::uint8_t> raw_pred) {
  if (truth.size() != raw_pred.size()) throw ShapeError("point_adjust: length mismatch");
  std::vector<std::uint8_t> out(raw_pred.begin(), raw_pred.end());
  std::size_t i = 0;
  while (i < truth.size()) {
    if (!truth[i]) {
      ++i;
      continue;
    }
    std::size_t end = i;
    bool hit = false;
    for (; end < truth.size() && truth[end]; ++end) {
      if (raw_pred[end]) hit = true;
    }
    if (hit) std::fill(out.begin() + static_cast<std::ptrdiff_t>(i),
                       out.begin() + static_cast<std::ptrdiff_t>(end), std::uint8_t{1});
    i = end;
  }
  return out;
}

DetectionScores point_adjust_f1(std::span<const std::uint8_t> truth,
                                std::span<const std::uint8_t> raw_pred) {
  const std::vector<std::uint8_t> adjusted = point_adjust(truth, raw_pred);
  return detection_scores(truth, adjusted);
}

double accuracy(std::span<const std::size_t> truth, std::span<const std::size_t> pred) {
  require_same_length(truth.size(), pred.size(), "accuracy");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == pred[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ShapeError("quantile: no values");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace perimid
