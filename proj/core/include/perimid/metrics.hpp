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
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "perimid/tensor.hpp"

namespace perimid {

/// Task-level results. Serializes to
///   {"task": str, "metrics": {name: number}, "counts": {name: integer}}
/// with keys sorted for a stable layout.
class MetricReport {
 public:
  MetricReport() = default;
  explicit MetricReport(std::string task) : task_(std::move(task)) {}

  /// Throws NumericError for a non-finite value.
  MetricReport& set(const std::string& name, double value);
  MetricReport& count(const std::string& name, std::size_t value);

  const std::string& task() const { return task_; }
  double metric(const std::string& name) const;
  bool has(const std::string& name) const { return metrics_.count(name) > 0; }
  const std::map<std::string, double>& metrics() const { return metrics_; }
  const std::map<std::string, std::size_t>& counts() const { return counts_; }

  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);

 private:
  std::string task_;
  std::map<std::string, double> metrics_;
  std::map<std::string, std::size_t> counts_;
};

struct ErrorPair {
  double mse = 0.0;
  double mae = 0.0;
};

ErrorPair mse_mae(const Tensor& truth, const Tensor& pred);
ErrorPair mse_mae(std::span<const double> truth, std::span<const double> pred);

/// 200/T * sum |x - y| / (|x| + |y|); terms with a near-zero denominator
/// count as zero.
double smape(std::span<const double> truth, std::span<const double> pred);
/// 100/T * sum |x - y| / |x|; terms with |x| < 1e-12 count as zero.
double mape(std::span<const double> truth, std::span<const double> pred);
/// Mean absolute error scaled by the in-sample seasonal-naive error
/// mean_{j>=q} |s_j - s_{j-q}|. Throws NumericError when that scale is zero.
double mase(std::span<const double> truth, std::span<const double> pred,
            std::span<const double> insample, std::size_t q);

/// Repeats the last q in-sample values over the horizon.
std::vector<double> seasonal_naive(std::span<const double> insample, std::size_t q,
                                   std::size_t horizon);

struct ForecastAccuracy {
  double smape = 0.0;
  double mape = 0.0;
  double mase = 0.0;
  double owa = 0.0;
};

/// OWA = (SMAPE / SMAPE_naive2 + MASE / MASE_naive2) / 2. When `naive2` is
/// empty the seasonal-naive forecast stands in for the reference method.
ForecastAccuracy smape_mape_mase_owa(std::span<const double> truth, std::span<const double> pred,
                                     std::span<const double> insample, std::size_t q,
                                     std::span<const double> naive2 = {});

struct DetectionScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Pointwise precision/recall/F1 with 0/0 taken as 0.
DetectionScores detection_scores(std::span<const std::uint8_t> truth,
                                 std::span<const std::uint8_t> pred);

/// Marks every true anomaly segment containing at least one raw positive as
/// fully detected.
std::vector<std::uint8_t> point_adjust(std::span<const std::uint8_t> truth,
                                       std::span<const std::uint8_t> raw_pred);

DetectionScores point_adjust_f1(std::span<const std::uint8_t> truth,
                                std::span<const std::uint8_t> raw_pred);

double accuracy(std::span<const std::size_t> truth, std::span<const std::size_t> pred);

/// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace perimid
