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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "perimid/dataio.hpp"
#include "perimid/metrics.hpp"
#include "perimid/model.hpp"
#include "perimid/preprocessing.hpp"
#include "perimid/training.hpp"

namespace perimid {

/// How per-channel reconstruction errors combine into one anomaly score.
enum class ScoreAggregation { mean, max };

std::string_view to_string(ScoreAggregation aggregation);
ScoreAggregation parse_score_aggregation(std::string_view name);

struct TaskSpec {
  TaskKind kind = TaskKind::forecast;
  std::size_t input_len = 96;
  /// Forecast horizon; impute and anomaly reconstruct input_len points.
  std::size_t target_len = 96;
  std::size_t num_classes = 2;
  double mask_ratio = 0.25;
  double anomaly_threshold_quantile = 0.99;
  ScoreAggregation aggregation = ScoreAggregation::mean;
  bool pre_interpolate = true;
  /// Window stride when cutting training samples from a series.
  std::size_t stride = 1;

  std::size_t output_len() const;
  void validate() const;
};

/// T x C forecast of the window x.
Tensor forecast(const PeriMidFormer& model, const Tensor& x);

/// Completes x_masked. Missing entries are pre-interpolated (or zero-filled
/// when pre_interp is false), reconstructed by the model, and observed
/// entries are copied back verbatim.
Tensor impute(const PeriMidFormer& model, const Tensor& x_masked, const MissingMask& mask,
              bool pre_interp = true);

/// Missing entries replaced by zeros.
Tensor zero_fill(const Tensor& x, const MissingMask& mask);

/// Recovers the mask stored in Sample::weight (nonzero = missing).
MissingMask mask_from_weights(const Tensor& weight);

std::vector<Sample> forecast_samples(const Tensor& series, std::size_t input_len,
                                     std::size_t target_len, std::size_t stride);
/// Window i gets gen_mask(L, C, ratio, seed + i). The input is the masked
/// window after pre-interpolation or zero filling, the target the full window
/// and the weight the mask, so the loss only sees missing points.
std::vector<Sample> imputation_samples(const Tensor& series, std::size_t input_len,
                                       std::size_t stride, double ratio, std::uint64_t seed,
                                       bool pre_interp);
/// Input and target are the same window.
std::vector<Sample> reconstruction_samples(const Tensor& series, std::size_t input_len,
                                           std::size_t stride);

/// Pooled mse/mae over all samples. With a season length q it adds mean
/// smape, mape, mase and owa over every (sample, channel) pair, using the
/// input window as the in-sample history.
MetricReport evaluate_forecast(const PeriMidFormer& model, std::span<const Sample> samples,
                               std::optional<std::size_t> season = std::nullopt);

/// mse/mae on missing points for the model ("mse", "mae") and for
/// pre-interpolation alone ("baseline_mse", "baseline_mae").
MetricReport evaluate_imputation(const PeriMidFormer& model, std::span<const Sample> samples,
                                 bool pre_interp = true);

/// One reconstruction error per time point of `series`, from windows at
/// stride L plus a final window flush with the end.
std::vector<double> reconstruction_scores(const PeriMidFormer& model, const Tensor& series,
                                          ScoreAggregation aggregation = ScoreAggregation::mean);

struct AnomalyResult {
  MetricReport report{"anomaly"};
  double threshold = 0.0;
  std::vector<double> scores;
  std::vector<std::uint8_t> raw;
  std::vector<std::uint8_t> adjusted;
};

/// Trains on normal data by reconstruction (skipped when epochs is 0),
/// thresholds test scores at the chosen quantile of training scores and
/// reports point-adjusted precision, recall and F1.
AnomalyResult detect_anomalies(PeriMidFormer& model, const Tensor& train_series,
                               const Tensor& test_series, std::span<const std::uint8_t> labels,
                               const TaskSpec& spec, const TrainConfig& train_config);

/// Anomaly scoring against a fixed threshold.
std::vector<std::uint8_t> flag_anomalies(std::span<const double> scores, double threshold);

struct ClassificationResult {
  MetricReport report{"classify"};
  std::vector<std::size_t> predictions;
  TrainResult training;
};

/// Trains with cross-entropy (skipped when epochs is 0) and reports test
/// accuracy.
ClassificationResult classify(PeriMidFormer& model, std::span<const Sample> train,
                              std::span<const Sample> test, const TrainConfig& train_config);

/// Class c holds sines of period periods[c] with random phase, amplitude in
/// [0.5, 1.5] and Gaussian noise. Labels cycle through the classes.
std::vector<Sample> period_classification_samples(std::size_t count, std::size_t input_len,
                                                  std::size_t channels,
                                                  std::span<const std::size_t> periods,
                                                  double noise_sigma, std::uint64_t seed);

struct SweepRow {
  std::size_t k = 0;
  double mse = 0.0;
  double mae = 0.0;
  double final_loss = 0.0;
};

/// Trains one fresh forecast model per k in [k_min, k_max] and evaluates it.
std::vector<SweepRow> sweep_k(const ModelConfig& base, std::span<const Sample> train,
                              std::span<const Sample> eval, std::size_t k_min, std::size_t k_max,
                              const TrainConfig& train_config);

}  // namespace perimid
