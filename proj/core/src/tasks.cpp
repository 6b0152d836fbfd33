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

#include "perimid/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "perimid/errors.hpp"
#include "perimid/parallel.hpp"

namespace perimid {

std::string_view to_string(ScoreAggregation aggregation) {
  return aggregation == ScoreAggregation::mean ? "mean" : "max";
}

ScoreAggregation parse_score_aggregation(std::string_view name) {
  if (name == "mean") return ScoreAggregation::mean;
  if (name == "max") return ScoreAggregation::max;
  throw ConfigError("unknown score aggregation '" + std::string(name) + "' (mean|max)");
}

std::size_t TaskSpec::output_len() const {
  return kind == TaskKind::forecast ? target_len : input_len;
}

void TaskSpec::validate() const {
  if (input_len < 4) throw ConfigError("task: input_len must be at least 4");
  if (stride == 0) throw ConfigError("task: stride must be at least 1");
  switch (kind) {
    case TaskKind::forecast:
      if (target_len == 0) throw ConfigError("task: forecast target_len must be at least 1");
      break;
    case TaskKind::classify:
      if (num_classes < 2) throw ConfigError("task: classification needs at least 2 classes");
      break;
    case TaskKind::impute:
      if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) {
        throw ConfigError("task: mask_ratio must lie in (0, 1)");
      }
      break;
    case TaskKind::anomaly:
      if (!(anomaly_threshold_quantile >= 0.0 && anomaly_threshold_quantile <= 1.0)) {
        throw ConfigError("task: anomaly threshold quantile must lie in [0, 1]");
      }
      break;
  }
}

Tensor forecast(const PeriMidFormer& model, const Tensor& x) {
  if (model.config().task == TaskKind::classify) {
    throw ConfigError("forecast: model has a classification head");
  }
  return model.predict(x);
}

Tensor zero_fill(const Tensor& x, const MissingMask& mask) {
  Tensor out = x;
  for (std::size_t t = 0; t < mask.length(); ++t) {
    for (std::size_t c = 0; c < mask.channels(); ++c) {
      if (mask(t, c)) out(t, c) = 0.0;
    }
  }
  return out;
}

MissingMask mask_from_weights(const Tensor& weight) {
  MissingMask mask(weight.rows(), weight.cols());
  for (std::size_t t = 0; t < weight.rows(); ++t) {
    for (std::size_t c = 0; c < weight.cols(); ++c) mask.set(t, c, weight(t, c) != 0.0);
  }
  return mask;
}

namespace {

void check_mask(const Tensor& x, const MissingMask& mask) {
  if (x.rank() != 2 || mask.length() != x.rows() || mask.channels() != x.cols()) {
    throw ShapeError("impute: mask shape " + std::to_string(mask.length()) + "x" +
                     std::to_string(mask.channels()) + " does not match input " +
                     to_string(x.shape()));
  }
}

}  // namespace

Tensor impute(const PeriMidFormer& model, const Tensor& x_masked, const MissingMask& mask,
              bool pre_interp) {
  check_mask(x_masked, mask);
  if (model.config().output_len() != x_masked.rows() ||
      model.config().task == TaskKind::classify) {
    throw ConfigError("impute: model must reconstruct its input length");
  }
  for (std::size_t c = 0; c < mask.channels(); ++c) {
    if (mask.missing_count(c) == mask.length()) {
      throw DataError("impute: channel " + std::to_string(c) + " is fully missing");
    }
  }
  if (mask.missing_count() == 0) return x_masked;
  const Tensor filled = pre_interp ? pre_interpolate(x_masked, mask) : zero_fill(x_masked, mask);
  Tensor out = model.predict(filled);
  for (std::size_t t = 0; t < mask.length(); ++t) {
    for (std::size_t c = 0; c < mask.channels(); ++c) {
      if (!mask(t, c)) out(t, c) = x_masked(t, c);
    }
  }
  return out;
}

std::vector<Sample> forecast_samples(const Tensor& series, std::size_t input_len,
                                     std::size_t target_len, std::size_t stride) {
  if (target_len == 0) throw ConfigError("forecast samples need target_len >= 1");
  std::vector<Sample> out;
  for (Window& w : window(series, input_len, target_len, stride)) {
    out.push_back({std::move(w.input), std::move(w.target), {}, 0});
  }
  return out;
}

std::vector<Sample> imputation_samples(const Tensor& series, std::size_t input_len,
                                       std::size_t stride, double ratio, std::uint64_t seed,
                                       bool pre_interp) {
  std::vector<Sample> out;
  std::uint64_t i = 0;
  for (Window& w : window(series, input_len, 0, stride)) {
    const MissingMask mask = gen_mask(input_len, series.cols(), ratio, seed + i++);
    Sample s;
    s.input = pre_interp ? pre_interpolate(w.input, mask) : zero_fill(w.input, mask);
    s.target = std::move(w.input);
    s.weight = mask.as_weights();
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> reconstruction_samples(const Tensor& series, std::size_t input_len,
                                           std::size_t stride) {
  std::vector<Sample> out;
  for (Window& w : window(series, input_len, 0, stride)) {
    Sample s;
    s.target = w.input;
    s.input = std::move(w.input);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

std::vector<Tensor> predict_all(const PeriMidFormer& model, std::span<const Sample> samples) {
  std::vector<Tensor> preds(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) { preds[i] = model.predict(samples[i].input); });
  return preds;
}

std::vector<double> column(const Tensor& x, std::size_t c) {
  std::vector<double> out(x.rows());
  for (std::size_t t = 0; t < x.rows(); ++t) out[t] = x(t, c);
  return out;
}

}  // namespace

MetricReport evaluate_forecast(const PeriMidFormer& model, std::span<const Sample> samples,
                               std::optional<std::size_t> season) {
  if (samples.empty()) throw DataError("evaluate_forecast: no samples");
  const std::vector<Tensor> preds = predict_all(model, samples);
  std::vector<double> truth_all, pred_all;
  ForecastAccuracy acc;
  std::size_t series_count = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Tensor& truth = samples[i].target;
    if (truth.shape() != preds[i].shape()) {
      throw ShapeError("evaluate_forecast: target " + to_string(truth.shape()) +
                       " vs prediction " + to_string(preds[i].shape()));
    }
    truth_all.insert(truth_all.end(), truth.data().begin(), truth.data().end());
    pred_all.insert(pred_all.end(), preds[i].data().begin(), preds[i].data().end());
    if (!season) continue;
    for (std::size_t c = 0; c < truth.cols(); ++c) {
      const auto y = column(truth, c);
      const auto p = column(preds[i], c);
      const auto h = column(samples[i].input, c);
      const ForecastAccuracy a = smape_mape_mase_owa(y, p, h, *season);
      acc.smape += a.smape;
      acc.mape += a.mape;
      acc.mase += a.mase;
      acc.owa += a.owa;
      ++series_count;
    }
  }
  const ErrorPair e = mse_mae(truth_all, pred_all);
  MetricReport report("forecast");
  report.set("mse", e.mse).set("mae", e.mae).count("windows", samples.size());
  if (season && series_count) {
    const auto n = static_cast<double>(series_count);
    report.set("smape", acc.smape / n)
        .set("mape", acc.mape / n)
        .set("mase", acc.mase / n)
        .set("owa", acc.owa / n)
        .count("season", *season);
  }
  return report;
}

MetricReport evaluate_imputation(const PeriMidFormer& model, std::span<const Sample> samples,
                                 bool pre_interp) {
  if (samples.empty()) throw DataError("evaluate_imputation: no samples");
  std::vector<Tensor> preds(samples.size());
  std::vector<MissingMask> masks(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    masks[i] = mask_from_weights(samples[i].weight);
    preds[i] = impute(model, samples[i].input, masks[i], pre_interp);
  });
  std::vector<double> truth, model_vals, base_vals;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Tensor baseline = pre_interpolate(samples[i].input, masks[i]);
    for (std::size_t t = 0; t < masks[i].length(); ++t) {
      for (std::size_t c = 0; c < masks[i].channels(); ++c) {
        if (!masks[i](t, c)) continue;
        truth.push_back(samples[i].target(t, c));
        model_vals.push_back(preds[i](t, c));
        base_vals.push_back(baseline(t, c));
      }
    }
  }
  if (truth.empty()) throw DataError("evaluate_imputation: no missing points");
  const ErrorPair m = mse_mae(truth, model_vals);
  const ErrorPair b = mse_mae(truth, base_vals);
  MetricReport report("impute");
  report.set("mse", m.mse)
      .set("mae", m.mae)
      .set("baseline_mse", b.mse)
      .set("baseline_mae", b.mae)
      .count("windows", samples.size())
      .count("missing_points", truth.size());
  return report;
}

std::vector<double> reconstruction_scores(const PeriMidFormer& model, const Tensor& series,
                                          ScoreAggregation aggregation) {
  const std::size_t L = model.config().input_len;
  const std::size_t n = series.rows();
  if (n < L) {
    throw DataError("reconstruction_scores: series of length " + std::to_string(n) +
                    " is shorter than the window " + std::to_string(L));
  }
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + L <= n; s += L) starts.push_back(s);
  if (starts.back() + L < n) starts.push_back(n - L);

  std::vector<Tensor> errors(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) {
    const Tensor x = slice_time(series, starts[i], starts[i] + L);
    const Tensor y = model.predict(x);
    Tensor e({L, 1});
    for (std::size_t t = 0; t < L; ++t) {
      double acc = 0.0;
      for (std::size_t c = 0; c < x.cols(); ++c) {
        const double d = (x(t, c) - y(t, c)) * (x(t, c) - y(t, c));
        acc = aggregation == ScoreAggregation::mean ? acc + d : std::max(acc, d);
      }
      e(t, 0) = aggregation == ScoreAggregation::mean ? acc / static_cast<double>(x.cols()) : acc;
    }
    errors[i] = std::move(e);
  });

  std::vector<double> scores(n, 0.0);
  std::vector<std::uint8_t> seen(n, 0);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    for (std::size_t t = 0; t < L; ++t) {
      const std::size_t pos = starts[i] + t;
      if (seen[pos]) continue;
      scores[pos] = errors[i](t, 0);
      seen[pos] = 1;
    }
  }
  return scores;
}

std::vector<std::uint8_t> flag_anomalies(std::span<const double> scores, double threshold) {
  std::vector<std::uint8_t> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > threshold ? 1 : 0;
  return out;
}

AnomalyResult detect_anomalies(PeriMidFormer& model, const Tensor& train_series,
                               const Tensor& test_series, std::span<const std::uint8_t> labels,
                               const TaskSpec& spec, const TrainConfig& train_config) {
  spec.validate();
  if (model.config().task == TaskKind::classify || model.config().output_len() != spec.input_len) {
    throw ConfigError("anomaly: model must reconstruct windows of input_len");
  }
  if (train_series.rank() != 2 || train_series.rows() < spec.input_len) {
    throw DataError("anomaly: empty training set");
  }
  if (labels.size() != test_series.rows()) {
    throw ShapeError("anomaly: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(test_series.rows()) + " test points");
  }
  if (train_config.epochs > 0) {
    const auto samples = reconstruction_samples(train_series, spec.input_len, spec.stride);
    train(model, samples, train_config);
  }
  AnomalyResult result;
  const auto train_scores = reconstruction_scores(model, train_series, spec.aggregation);
  result.threshold = quantile(train_scores, spec.anomaly_threshold_quantile);
  result.scores = reconstruction_scores(model, test_series, spec.aggregation);
  result.raw = flag_anomalies(result.scores, result.threshold);
  result.adjusted = point_adjust(labels, result.raw);
  const DetectionScores adjusted = detection_scores(labels, result.adjusted);
  const DetectionScores raw = detection_scores(labels, result.raw);
  const auto positives = [](std::span<const std::uint8_t> v) {
    return static_cast<std::size_t>(std::count(v.begin(), v.end(), std::uint8_t{1}));
  };
  result.report.set("precision", adjusted.precision)
      .set("recall", adjusted.recall)
      .set("f1", adjusted.f1)
      .set("raw_f1", raw.f1)
      .set("threshold", result.threshold)
      .count("test_points", labels.size())
      .count("anomalies", positives(labels))
      .count("flagged", positives(result.adjusted));
  return result;
}

ClassificationResult classify(PeriMidFormer& model, std::span<const Sample> train_set,
                              std::span<const Sample> test_set, const TrainConfig& train_config) {
  if (model.config().task != TaskKind::classify) {
    throw ConfigError("classify: model has no classification head");
  }
  if (test_set.empty()) throw DataError("classify: empty test set");
  const std::size_t classes = model.config().num_classes;
  for (const auto set : {train_set, test_set}) {
    for (const Sample& s : set) {
      if (s.label >= classes) {
        throw DataError("classify: label " + std::to_string(s.label) + " out of range for " +
                        std::to_string(classes) + " classes");
      }
    }
  }
  ClassificationResult result;
  if (train_config.epochs > 0) {
    if (train_set.empty()) throw DataError("classify: empty training set");
    TrainConfig cfg = train_config;
    cfg.loss = LossKind::cross_entropy;
    result.training = train(model, train_set, cfg);
  }
  result.predictions.resize(test_set.size());
  parallel_for(test_set.size(),
               [&](std::size_t i) { result.predictions[i] = model.predict_class(test_set[i].input); });
  std::vector<std::size_t> truth(test_set.size());
  for (std::size_t i = 0; i < test_set.size(); ++i) truth[i] = test_set[i].label;
  result.report.set("accuracy", accuracy(truth, result.predictions))
      .count("test_samples", test_set.size())
      .count("train_samples", train_set.size());
  return result;
}

std::vector<Sample> period_classification_samples(std::size_t count, std::size_t input_len,
                                                  std::size_t channels,
                                                  std::span<const std::size_t> periods,
                                                  double noise_sigma, std::uint64_t seed) {
  if (periods.size() < 2) throw ConfigError("period classes: need at least two periods");
  if (input_len == 0 || channels == 0) throw ConfigError("period classes: empty window shape");
  Rng rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> amp(0.5, 1.5);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Sample s;
    s.label = i % periods.size();
    const auto period = static_cast<double>(periods[s.label]);
    s.input = Tensor({input_len, channels});
    for (std::size_t c = 0; c < channels; ++c) {
      const double ph = phase(rng);
      const double a = amp(rng);
      for (std::size_t t = 0; t < input_len; ++t) {
        double v = a * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period + ph);
        if (noise_sigma > 0.0) v += noise_sigma * noise(rng);
        s.input(t, c) = v;
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SweepRow> sweep_k(const ModelConfig& base, std::span<const Sample> train_set,
                              std::span<const Sample> eval, std::size_t k_min, std::size_t k_max,
                              const TrainConfig& train_config) {
  if (k_min < 2 || k_max < k_min) throw ConfigError("sweep-k: need 2 <= k_min <= k_max");
  if (base.task == TaskKind::classify) throw ConfigError("sweep-k: needs a reconstruction task");
  std::vector<SweepRow> rows;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    ModelConfig cfg = base;
    cfg.k = k;
    cfg.frozen_frequencies.clear();
    PeriMidFormer model(cfg);
    SweepRow row;
    row.k = k;
    if (train_config.epochs > 0) {
      const TrainResult r = train(model, train_set, train_config);
      if (!r.losses.empty()) row.final_loss = r.losses.back();
    }
    const MetricReport report = evaluate_forecast(model, eval);
    row.mse = report.metric("mse");
    row.mae = report.metric("mae");
    rows.push_back(row);
  }
  return rows;
}

}  // namespace perimid
