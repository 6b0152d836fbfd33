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

#include "perimid/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "perimid/checkpoint.hpp"
#include "perimid/errors.hpp"
#include "perimid/flows.hpp"
#include "perimid/gradcheck.hpp"
#include "perimid/pyramid.hpp"
#include "perimid/spectral.hpp"

namespace perimid::cli {

namespace {

using json = nlohmann::json;
using Setter = std::function<void(RunConfig&, const std::string&)>;

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("'" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

std::size_t as_size(const std::string& key, const std::string& v) {
  return parse_number<std::size_t>(key, v);
}
double as_double(const std::string& key, const std::string& v) {
  const double d = parse_number<double>(key, v);
  if (!std::isfinite(d)) throw ConfigError("'" + key + "': value must be finite");
  return d;
}
bool as_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<std::size_t> as_size_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(as_size(key, item));
  }
  return out;
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
#define PERIMID_SET(key, body) \
  t[key] = [](RunConfig & c, const std::string& v) { [[maybe_unused]] const std::string k = key; body; }
    PERIMID_SET("data.csv", c.data.csv_path = v);
    PERIMID_SET("data.has_header", c.data.has_header = as_bool(k, v));
    PERIMID_SET("data.time_column", c.data.time_column = v);
    PERIMID_SET("data.label_column", c.label_column = v);
    PERIMID_SET("data.length", c.data.generator.length = as_size(k, v));
    PERIMID_SET("data.channels", c.data.generator.channels = as_size(k, v));
    PERIMID_SET("data.tones", c.data.generator.tones = parse_tones(v));
    PERIMID_SET("data.reference_length", c.data.generator.reference_length = as_size(k, v));
    PERIMID_SET("data.noise_sigma", c.data.generator.noise_sigma = as_double(k, v));
    PERIMID_SET("data.trend_slope", c.data.generator.trend_slope = as_double(k, v));
    PERIMID_SET("data.seed", c.data.generator.seed = parse_number<std::uint64_t>(k, v));
    PERIMID_SET("data.stride", c.task.stride = as_size(k, v));
    PERIMID_SET("data.train", c.data.split.train = as_double(k, v));
    PERIMID_SET("data.val", c.data.split.val = as_double(k, v));
    PERIMID_SET("data.test", c.data.split.test = as_double(k, v));
    PERIMID_SET("model.task", c.model.task = c.task.kind = parse_task_kind(v));
    PERIMID_SET("model.input_len", c.model.input_len = c.task.input_len = as_size(k, v));
    PERIMID_SET("model.target_len", c.model.target_len = c.task.target_len = as_size(k, v));
    PERIMID_SET("model.k", c.model.k = as_size(k, v));
    PERIMID_SET("model.kernel", c.model.kernel = as_size(k, v));
    PERIMID_SET("model.d_model", c.model.encoder.d_model = as_size(k, v));
    PERIMID_SET("model.layers", c.model.encoder.layers = as_size(k, v));
    PERIMID_SET("model.heads", c.model.encoder.heads = as_size(k, v));
    PERIMID_SET("model.ff_mult", c.model.encoder.ff_mult = as_size(k, v));
    PERIMID_SET("model.dropout", c.model.encoder.dropout = as_double(k, v));
    PERIMID_SET("model.layer_norm", c.model.encoder.layer_norm = as_bool(k, v));
    PERIMID_SET("model.attention", c.model.attention = parse_attention_mode(v));
    PERIMID_SET("model.num_classes", c.model.num_classes = c.task.num_classes = as_size(k, v));
    PERIMID_SET("model.max_flows", c.model.max_flows = as_size(k, v));
    PERIMID_SET("model.frozen_frequencies", c.model.frozen_frequencies = as_size_list(k, v));
    PERIMID_SET("train.lr", c.train.lr = as_double(k, v));
    PERIMID_SET("train.epochs", c.train.epochs = as_size(k, v));
    PERIMID_SET("train.batch_size", c.train.batch_size = as_size(k, v));
    PERIMID_SET("train.max_steps", c.train.max_steps = as_size(k, v));
    PERIMID_SET("train.clip_norm", c.train.clip_norm = as_double(k, v));
    PERIMID_SET("train.beta1", c.train.beta1 = as_double(k, v));
    PERIMID_SET("train.beta2", c.train.beta2 = as_double(k, v));
    PERIMID_SET("train.eps", c.train.eps = as_double(k, v));
    PERIMID_SET("train.seed", c.train.seed = c.model.init_seed = parse_number<std::uint64_t>(k, v));
    PERIMID_SET("train.shuffle", c.train.shuffle = as_bool(k, v));
    PERIMID_SET("train.loss", c.train.loss = parse_loss_kind(v));
    PERIMID_SET("task.mask_ratio", c.task.mask_ratio = as_double(k, v));
    PERIMID_SET("task.threshold_quantile", c.task.anomaly_threshold_quantile = as_double(k, v));
    PERIMID_SET("task.aggregation", c.task.aggregation = parse_score_aggregation(v));
    PERIMID_SET("task.pre_interpolate", c.task.pre_interpolate = as_bool(k, v));
    PERIMID_SET("task.season", c.season = as_size(k, v));
    PERIMID_SET("task.train_samples", c.train_samples = as_size(k, v));
    PERIMID_SET("task.test_samples", c.test_samples = as_size(k, v));
    PERIMID_SET("task.k_min", c.k_min = as_size(k, v));
    PERIMID_SET("task.k_max", c.k_max = as_size(k, v));
    PERIMID_SET("output.out", c.out = v);
    PERIMID_SET("output.checkpoint", c.checkpoint = v);
    PERIMID_SET("output.loss_csv", c.loss_csv = v);
    PERIMID_SET("output.table_csv", c.table_csv = v);
    PERIMID_SET("output.mask_csv", c.mask_csv = v);
    PERIMID_SET("output.flows", c.flows = as_bool(k, v));
#undef PERIMID_SET
    return t;
  }();
  return table;
}

void apply(RunConfig& config, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown configuration key '" + key + "'");
  it->second(config, value);
}

// Flag name -> configuration key. Every flag takes a value.
struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr FlagSpec kCommonFlags[] = {
    {"--csv", "data.csv", "Input CSV (synthetic data when absent)"},
    {"--time-column", "data.time_column", "CSV column to drop"},
    {"--label-column", "data.label_column", "CSV column holding labels"},
    {"--length", "data.length", "Synthetic series length"},
    {"--channels", "data.channels", "Synthetic channel count"},
    {"--tones", "data.tones", "Synthetic tones freq:amp[:phase],..."},
    {"--noise", "data.noise_sigma", "Synthetic noise sigma"},
    {"--stride", "data.stride", "Window stride"},
    {"--task", "model.task", "forecast|impute|anomaly|classify"},
    {"--input-len", "model.input_len", "Window length L"},
    {"--target-len", "model.target_len", "Forecast horizon T"},
    {"--k", "model.k", "Number of periods"},
    {"--kernel", "model.kernel", "Moving-average kernel"},
    {"--d-model", "model.d_model", "Token width"},
    {"--layers", "model.layers", "Encoder layers"},
    {"--heads", "model.heads", "Attention heads"},
    {"--dropout", "model.dropout", "Dropout rate"},
    {"--attention", "model.attention", "ppam|full"},
    {"--num-classes", "model.num_classes", "Classes for classify"},
    {"--lr", "train.lr", "Adam learning rate"},
    {"--epochs", "train.epochs", "Training epochs"},
    {"--batch-size", "train.batch_size", "Mini-batch size"},
    {"--max-steps", "train.max_steps", "Stop after this many steps"},
    {"--seed", "train.seed", "Seed for initialization, shuffling and masks"},
    {"--mask-ratio", "task.mask_ratio", "Missing fraction for impute"},
    {"--threshold-quantile", "task.threshold_quantile", "Anomaly threshold quantile"},
    {"--aggregation", "task.aggregation", "Anomaly channel aggregation mean|max"},
    {"--season", "task.season", "Season length for smape/mase/owa"},
    {"--train-samples", "task.train_samples", "Synthetic training samples (classify)"},
    {"--test-samples", "task.test_samples", "Synthetic test samples (classify)"},
    {"--out", "output.out", "JSON report path"},
    {"--checkpoint", "output.checkpoint", "Checkpoint to write (train) or read"},
};

struct Series {
  Tensor values;
  std::vector<std::uint8_t> labels;  // empty unless a label column was read
};

Series load_series(const RunConfig& config, bool with_labels) {
  if (config.data.csv_path.empty()) return {config.data.load(), {}};
  const std::optional<std::string> time =
      config.data.time_column.empty() ? std::nullopt
                                      : std::optional<std::string>(config.data.time_column);
  CsvTable table = load_csv(config.data.csv_path, config.data.has_header, time);
  if (!with_labels || config.label_column.empty()) return {std::move(table.values), {}};
  const auto it = std::find(table.columns.begin(), table.columns.end(), config.label_column);
  if (it == table.columns.end()) {
    throw DataError("label column '" + config.label_column + "' not found");
  }
  const auto col = static_cast<std::size_t>(it - table.columns.begin());
  const std::size_t rows = table.values.rows();
  const std::size_t cols = table.values.cols();
  if (cols < 2) throw DataError("csv: no value columns besides the labels");
  Series out{Tensor({rows, cols - 1}), std::vector<std::uint8_t>(rows)};
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t dst = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (c == col) {
        out.labels[r] = table.values(r, c) != 0.0 ? 1 : 0;
      } else {
        out.values(r, dst++) = table.values(r, c);
      }
    }
  }
  return out;
}

void write_json(const RunConfig& config, const json& report, std::ostream& out) {
  if (config.out.empty()) return;
  std::ofstream file(config.out);
  if (!file) throw Error("cannot write " + config.out);
  file << std::setw(2) << report << '\n';
  out << "report: " << config.out << '\n';
}

PeriMidFormer make_model(const RunConfig& config, std::size_t channels) {
  ModelConfig mc = config.model;
  mc.channels = channels;
  return PeriMidFormer(mc);
}

// Follows the model pipeline up to the spectrum on one window.
Tensor seasonal_of(const RunConfig& config, const Tensor& series) {
  const std::size_t n = config.task.input_len ? std::min(config.task.input_len, series.rows())
                                               : series.rows();
  const Tensor window = slice_time(series, 0, n);
  return decompose(normalize(window).values, config.model.kernel).seasonal;
}

std::vector<Sample> task_samples(const RunConfig& config, const Tensor& series,
                                 std::uint64_t mask_seed) {
  const std::size_t L = config.model.input_len;
  switch (config.model.task) {
    case TaskKind::forecast:
      return forecast_samples(series, L, config.model.target_len, config.task.stride);
    case TaskKind::impute:
      return imputation_samples(series, L, config.task.stride, config.task.mask_ratio, mask_seed,
                                config.task.pre_interpolate);
    case TaskKind::anomaly:
      return reconstruction_samples(series, L, config.task.stride);
    case TaskKind::classify:
      break;
  }
  throw ConfigError("classification samples come from labelled data");
}

struct ClassData {
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::size_t channels = 1;
};

ClassData class_data(const RunConfig& config) {
  const std::size_t L = config.model.input_len;
  ClassData out;
  if (config.data.csv_path.empty()) {
    const std::vector<std::size_t> periods = {8, 16};
    if (config.model.num_classes != periods.size()) {
      throw ConfigError("synthetic classification has exactly 2 classes");
    }
    out.channels = config.data.generator.channels;
    out.train = period_classification_samples(config.train_samples, L, out.channels, periods,
                                              config.data.generator.noise_sigma,
                                              config.data.generator.seed);
    out.test = period_classification_samples(config.test_samples, L, out.channels, periods,
                                             config.data.generator.noise_sigma,
                                             config.data.generator.seed + 1);
    return out;
  }
  // One sample per row: the label column plus L x C values in time-major order.
  if (config.label_column.empty()) throw ConfigError("classify: --label-column is required with --csv");
  CsvTable table = load_csv(config.data.csv_path, true);
  const auto it = std::find(table.columns.begin(), table.columns.end(), config.label_column);
  if (it == table.columns.end()) throw DataError("label column '" + config.label_column + "' not found");
  const auto col = static_cast<std::size_t>(it - table.columns.begin());
  const std::size_t width = table.values.cols() - 1;
  if (width == 0 || width % L != 0) {
    throw DataError("classify: " + std::to_string(width) + " values per row is not a multiple of L=" +
                    std::to_string(L));
  }
  out.channels = width / L;
  std::vector<Sample> all;
  for (std::size_t r = 0; r < table.values.rows(); ++r) {
    Sample s;
    const double label = table.values(r, col);
    if (label < 0.0 || label != std::floor(label)) {
      throw DataError("classify: row " + std::to_string(r + 1) + " has an invalid label");
    }
    s.label = static_cast<std::size_t>(label);
    std::vector<double> vals;
    for (std::size_t c = 0; c < table.values.cols(); ++c) {
      if (c != col) vals.push_back(table.values(r, c));
    }
    s.input = Tensor({L, out.channels}, std::move(vals));
    all.push_back(std::move(s));
  }
  Rng rng(config.train.seed);
  std::shuffle(all.begin(), all.end(), rng);
  const auto n_train = static_cast<std::size_t>(
      std::floor((config.data.split.train + config.data.split.val) * static_cast<double>(all.size())));
  if (n_train == 0 || n_train >= all.size()) throw DataError("classify: too few rows to split");
  out.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
  return out;
}

// Evaluation commands use --checkpoint when given and train from scratch
// otherwise.
PeriMidFormer obtain_model(RunConfig& config, std::size_t channels,
                           std::span<const Sample> train_set, TaskKind task, std::ostream& out) {
  if (!config.checkpoint.empty()) {
    PeriMidFormer model = load_checkpoint(config.checkpoint);
    if (model.config().task != task) {
      throw ConfigError("checkpoint holds a " + std::string(to_string(model.config().task)) +
                        " model, expected " + std::string(to_string(task)));
    }
    if (model.config().channels != channels) {
      throw ConfigError("checkpoint expects " + std::to_string(model.config().channels) +
                        " channels, data has " + std::to_string(channels));
    }
    config.model = model.config();
    config.task.input_len = model.config().input_len;
    out << "loaded: " << config.checkpoint << '\n';
    return model;
  }
  PeriMidFormer model = make_model(config, channels);
  if (config.train.epochs > 0 && task != TaskKind::classify && task != TaskKind::anomaly) {
    const TrainResult r = train(model, train_set, config.train);
    out << "trained: " << r.steps << " steps, final loss " << r.losses.back() << '\n';
  }
  return model;
}

json config_json(const RunConfig& config) {
  json j;
  j["model"] = to_json(config.model);
  j["train"] = {{"lr", config.train.lr},      {"epochs", config.train.epochs},
                {"batch_size", config.train.batch_size}, {"max_steps", config.train.max_steps},
                {"seed", config.train.seed},  {"loss", to_string(config.train.loss)}};
  j["data"] = {{"csv", config.data.csv_path}, {"stride", config.task.stride}};
  return j;
}

void print_metrics(const MetricReport& report, std::ostream& out) {
  for (const auto& [name, value] : report.metrics()) out << name << ": " << value << '\n';
  for (const auto& [name, value] : report.counts()) out << name << ": " << value << '\n';
}

// ---- subcommands ----

int cmd_detect_periods(RunConfig& config, std::ostream& out) {
  const Series s = load_series(config, false);
  const PeriodSet periods = detect_periods(seasonal_of(config, s.values), config.model.k);
  json report = {{"command", "detect-periods"}, {"periods", to_json(periods)}};
  out << "length: " << periods.length << "\nfrequencies:";
  for (std::size_t f : periods.frequencies) out << ' ' << f;
  out << "\nperiods:";
  for (std::size_t p : periods.periods) out << ' ' << p;
  out << '\n';
  write_json(config, report, out);
  return 0;
}

int cmd_build_pyramid(RunConfig& config, std::ostream& out) {
  const Series s = load_series(config, false);
  const PeriodSet periods = detect_periods(seasonal_of(config, s.values), config.model.k);
  const PeriodicPyramid pyramid = build_pyramid(periods);
  json report = {{"command", "build-pyramid"}, {"pyramid", to_json(pyramid)}};
  out << "tokens: " << pyramid.layout.token_count() << "\nallowed pairs: "
      << pyramid.mask.allowed_count() << '\n';
  if (config.flows) {
    const auto flows = enumerate_flows(pyramid.relation, pyramid.layout, config.model.max_flows);
    report["flows"] = to_json(flows);
    out << "flows: " << flows.size() << '\n';
  }
  if (!config.mask_csv.empty()) {
    std::ofstream file(config.mask_csv);
    if (!file) throw Error("cannot write " + config.mask_csv);
    file << pyramid.mask.to_csv();
    out << "mask: " << config.mask_csv << '\n';
  }
  write_json(config, report, out);
  return 0;
}

int cmd_train(RunConfig& config, std::ostream& out) {
  config.train.checkpoint_path = config.checkpoint;
  std::vector<Sample> train_set, val_set;
  std::size_t channels = 1;
  if (config.model.task == TaskKind::classify) {
    ClassData d = class_data(config);
    train_set = std::move(d.train);
    val_set = std::move(d.test);
    channels = d.channels;
    config.train.loss = LossKind::cross_entropy;
  } else {
    const Series s = load_series(config, false);
    const DatasetSplits splits = split_series(s.values, config.data.split);
    channels = s.values.cols();
    train_set = task_samples(config, splits.train, config.train.seed);
    if (splits.val.rank() == 2 && splits.val.rows() >= config.model.input_len + config.model.output_len()) {
      val_set = task_samples(config, splits.val, config.train.seed + 7919);
    }
    if (config.train.loss == LossKind::cross_entropy) config.train.loss = LossKind::mse;
  }
  PeriMidFormer model = make_model(config, channels);
  const TrainResult result = train(model, train_set, config.train);
  if (!config.loss_csv.empty()) {
    write_loss_curve_csv(config.loss_csv, result.losses);
    out << "loss curve: " << config.loss_csv << '\n';
  }
  json report = {{"command", "train"},
                 {"task", to_string(config.model.task)},
                 {"steps", result.steps},
                 {"train_samples", train_set.size()},
                 {"final_loss", result.losses.empty() ? 0.0 : result.losses.back()},
                 {"config", config_json(config)}};
  out << "task: " << to_string(config.model.task) << "\nsteps: " << result.steps << '\n';
  if (!result.losses.empty()) out << "final loss: " << result.losses.back() << '\n';
  if (!val_set.empty()) {
    const double val = evaluate_loss(model, val_set, config.train.loss);
    report["val_loss"] = val;
    out << "val loss: " << val << '\n';
  }
  if (!config.checkpoint.empty()) out << "checkpoint: " << config.checkpoint << '\n';
  write_json(config, report, out);
  return 0;
}

int cmd_forecast(RunConfig& config, std::ostream& out) {
  config.model.task = config.task.kind = TaskKind::forecast;
  const Series s = load_series(config, false);
  const DatasetSplits splits = split_series(s.values, config.data.split);
  const auto train_set = config.checkpoint.empty()
                             ? task_samples(config, splits.train, config.train.seed)
                             : std::vector<Sample>{};
  PeriMidFormer model = obtain_model(config, s.values.cols(), train_set, TaskKind::forecast, out);
  const auto test_set = forecast_samples(splits.test, config.model.input_len,
                                         config.model.target_len, config.task.stride);
  const MetricReport report = evaluate_forecast(model, test_set, config.season);
  print_metrics(report, out);
  write_json(config, {{"command", "forecast"}, {"report", report.to_json()}, {"config", config_json(config)}},
             out);
  return 0;
}

int cmd_impute(RunConfig& config, std::ostream& out) {
  config.model.task = config.task.kind = TaskKind::impute;
  config.task.validate();
  const Series s = load_series(config, false);
  const DatasetSplits splits = split_series(s.values, config.data.split);
  const auto train_set = config.checkpoint.empty()
                             ? task_samples(config, splits.train, config.train.seed)
                             : std::vector<Sample>{};
  PeriMidFormer model = obtain_model(config, s.values.cols(), train_set, TaskKind::impute, out);
  const auto test_set =
      imputation_samples(splits.test, config.model.input_len, config.model.input_len,
                         config.task.mask_ratio, config.train.seed + 104729, config.task.pre_interpolate);
  const MetricReport report = evaluate_imputation(model, test_set, config.task.pre_interpolate);
  print_metrics(report, out);
  write_json(config, {{"command", "impute"}, {"report", report.to_json()}, {"config", config_json(config)}},
             out);
  return 0;
}

// Adds level shifts to copies of the synthetic test split and labels them.
void inject_anomalies(Tensor& test, std::vector<std::uint8_t>& labels, std::uint64_t seed) {
  labels.assign(test.rows(), 0);
  Rng rng(seed);
  const std::size_t segments = std::max<std::size_t>(1, test.rows() / 100);
  const std::size_t max_len = std::max<std::size_t>(2, std::min<std::size_t>(12, test.rows() / 4));
  std::uniform_int_distribution<std::size_t> len(2, max_len);
  for (std::size_t i = 0; i < segments; ++i) {
    const std::size_t n = len(rng);
    std::uniform_int_distribution<std::size_t> start(0, test.rows() - n);
    const std::size_t s = start(rng);
    for (std::size_t t = s; t < s + n; ++t) {
      labels[t] = 1;
      for (std::size_t c = 0; c < test.cols(); ++c) test(t, c) += 3.0;
    }
  }
}

int cmd_anomaly(RunConfig& config, std::ostream& out) {
  config.model.task = config.task.kind = TaskKind::anomaly;
  const Series s = load_series(config, true);
  if (!config.data.csv_path.empty() && s.labels.empty()) {
    throw ConfigError("anomaly: --label-column is required with --csv");
  }
  const DatasetSplits splits = split_series(s.values, config.data.split);
  Tensor test = splits.test;
  std::vector<std::uint8_t> labels;
  if (s.labels.empty()) {
    inject_anomalies(test, labels, config.train.seed + 31);
  } else {
    labels.assign(s.labels.begin() + static_cast<std::ptrdiff_t>(splits.test_begin), s.labels.end());
  }
  PeriMidFormer model = obtain_model(config, s.values.cols(), {}, TaskKind::anomaly, out);
  TrainConfig tc = config.train;
  if (!config.checkpoint.empty()) tc.epochs = 0;
  const AnomalyResult result = detect_anomalies(model, splits.train, test, labels, config.task, tc);
  print_metrics(result.report, out);
  write_json(config,
             {{"command", "anomaly"}, {"report", result.report.to_json()}, {"config", config_json(config)}},
             out);
  return 0;
}

int cmd_classify(RunConfig& config, std::ostream& out) {
  config.model.task = config.task.kind = TaskKind::classify;
  ClassData data = class_data(config);
  PeriMidFormer model = obtain_model(config, data.channels, {}, TaskKind::classify, out);
  TrainConfig tc = config.train;
  if (!config.checkpoint.empty()) tc.epochs = 0;
  const ClassificationResult result = classify(model, data.train, data.test, tc);
  if (!result.training.losses.empty()) {
    out << "trained: " << result.training.steps << " steps, final loss "
        << result.training.losses.back() << '\n';
  }
  print_metrics(result.report, out);
  write_json(config,
             {{"command", "classify"}, {"report", result.report.to_json()}, {"config", config_json(config)}},
             out);
  return 0;
}

int cmd_sweep_k(RunConfig& config, std::ostream& out) {
  config.model.task = config.task.kind = TaskKind::forecast;
  const Series s = load_series(config, false);
  const DatasetSplits splits = split_series(s.values, config.data.split);
  const auto train_set = task_samples(config, splits.train, config.train.seed);
  const Tensor& eval_part = splits.val.rank() == 2 ? splits.val : splits.test;
  auto eval_set = forecast_samples(eval_part.rows() >= config.model.input_len + config.model.target_len
                                       ? eval_part
                                       : splits.test,
                                   config.model.input_len, config.model.target_len, config.task.stride);
  ModelConfig base = config.model;
  base.channels = s.values.cols();
  const auto rows = sweep_k(base, train_set, eval_set, config.k_min, config.k_max, config.train);
  json table = json::array();
  std::vector<std::vector<double>> csv_rows;
  out << "k,mse,mae\n";
  for (const SweepRow& r : rows) {
    table.push_back({{"k", r.k}, {"mse", r.mse}, {"mae", r.mae}, {"final_loss", r.final_loss}});
    csv_rows.push_back({static_cast<double>(r.k), r.mse, r.mae, r.final_loss});
    out << r.k << ',' << r.mse << ',' << r.mae << '\n';
  }
  if (!config.table_csv.empty()) {
    write_csv(config.table_csv, {"k", "mse", "mae", "final_loss"}, csv_rows);
    out << "table: " << config.table_csv << '\n';
  }
  write_json(config, {{"command", "sweep-k"}, {"rows", table}, {"config", config_json(config)}}, out);
  return 0;
}

constexpr double kGradTolerance = 1e-3;

int cmd_gradcheck(RunConfig& config, std::ostream& out) {
  RunConfig c = config;
  if (c.model.task == TaskKind::classify) c.train.loss = LossKind::cross_entropy;
  const Series s = load_series(c, false);
  PeriMidFormer model = make_model(c, s.values.cols());
  Sample sample;
  const std::size_t L = c.model.input_len;
  if (c.model.task == TaskKind::classify) {
    sample.input = slice_time(s.values, 0, L);
    sample.label = 1 % c.model.num_classes;
  } else if (c.model.task == TaskKind::forecast) {
    sample = forecast_samples(s.values, L, c.model.target_len, 1).front();
  } else {
    sample = reconstruction_samples(s.values, L, 1).front();
  }
  const LossKind loss = c.model.task == TaskKind::classify ? LossKind::cross_entropy : c.train.loss;
  const GradCheckReport report = grad_check(
      [&](const Binding& bound) { return sample_loss(model, bound, sample, loss); },
      model.parameters());
  json blocks = json::array();
  for (const BlockError& b : report.blocks) {
    blocks.push_back({{"name", b.name},
                      {"max_relative_error", b.max_relative_error},
                      {"worst_index", b.worst_index},
                      {"analytic", b.analytic},
                      {"numeric", b.numeric}});
  }
  const bool passed = report.max_relative_error <= kGradTolerance;
  out << "blocks: " << report.blocks.size() << "\nmax relative error: " << std::setprecision(6)
      << report.max_relative_error << '\n'
      << (passed ? "gradcheck passed" : "gradcheck FAILED") << '\n';
  write_json(config,
             {{"command", "gradcheck"},
              {"max_relative_error", report.max_relative_error},
              {"tolerance", kGradTolerance},
              {"passed", passed},
              {"blocks", blocks},
              {"config", config_json(c)}},
             out);
  return passed ? 0 : 2;
}

}  // namespace

RunConfig default_config(const std::string& command) {
  RunConfig c;
  c.data.generator.length = 1024;
  c.data.generator.reference_length = 64;
  c.data.generator.tones = {{4.0, 1.0, 0.0}, {8.0, 0.5, 0.0}};
  c.data.generator.noise_sigma = 0.1;
  c.model.input_len = c.task.input_len = 96;
  c.model.target_len = c.task.target_len = 24;
  c.train.epochs = 5;
  c.task.stride = 4;
  if (command == "detect-periods" || command == "build-pyramid") {
    c.model.input_len = c.task.input_len = 0;  // whole series
  } else if (command == "gradcheck") {
    c.data.generator.length = 64;
    c.data.generator.channels = 2;
    c.model.input_len = c.task.input_len = 16;
    c.model.target_len = c.task.target_len = 8;
    c.model.kernel = 5;
    c.model.encoder.d_model = 8;
    c.model.encoder.heads = 2;
  } else if (command == "classify") {
    c.model.task = c.task.kind = TaskKind::classify;
    c.model.input_len = c.task.input_len = 64;
    c.train.epochs = 20;
  }
  return c;
}

void apply_config_file(RunConfig& config, const std::string& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& [section, keys] : tree) {
    if (keys.empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, node] : keys) apply(config, section + "." + key, node.data());
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Periodic pyramid transformer for time series", "perimid"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "INI file with [data] [model] [train] [task] [output]");
  std::vector<std::pair<const FlagSpec*, std::string>> flag_values(std::size(kCommonFlags));
  std::vector<CLI::Option*> flag_options;
  for (std::size_t i = 0; i < std::size(kCommonFlags); ++i) {
    flag_values[i].first = &kCommonFlags[i];
    flag_options.push_back(
        app.add_option(kCommonFlags[i].flag, flag_values[i].second, kCommonFlags[i].help));
  }
  bool no_header = false;
  bool no_pre_interp = false;
  app.add_flag("--no-header", no_header, "CSV has no header row");

  struct Extra {
    CLI::Option* option;
    const char* key;
    std::string value;
  };
  std::vector<std::unique_ptr<Extra>> extras;
  const auto extra = [&](CLI::App* sub, const char* flag, const char* key, const char* help) {
    extras.push_back(std::make_unique<Extra>(Extra{nullptr, key, {}}));
    extras.back()->option = sub->add_option(flag, extras.back()->value, help);
  };

  std::map<std::string, std::function<int(RunConfig&, std::ostream&)>> commands;
  const auto add = [&](const char* name, const char* help, auto fn) {
    commands[name] = fn;
    return app.add_subcommand(name, help);
  };
  add("detect-periods", "Top-k periods of a series as JSON", cmd_detect_periods);
  CLI::App* pyramid = add("build-pyramid", "Periodic pyramid, mask and flows", cmd_build_pyramid);
  bool flows = false;
  pyramid->add_flag("--flows", flows, "Include feature flows");
  extra(pyramid, "--mask-csv", "output.mask_csv", "Write the attention mask as CSV");
  CLI::App* train_cmd = add("train", "Train a model and write the loss curve", cmd_train);
  extra(train_cmd, "--loss-csv", "output.loss_csv", "Loss curve CSV (step,loss)");
  add("forecast", "Train or load a forecaster and evaluate it", cmd_forecast);
  CLI::App* impute_cmd = add("impute", "Train or load an imputer and evaluate it", cmd_impute);
  impute_cmd->add_flag("--no-pre-interp", no_pre_interp, "Zero-fill instead of pre-interpolating");
  add("anomaly", "Reconstruction-based anomaly detection", cmd_anomaly);
  add("classify", "Train and evaluate a classifier", cmd_classify);
  CLI::App* sweep = add("sweep-k", "Validation error for each k", cmd_sweep_k);
  extra(sweep, "--k-min", "task.k_min", "Smallest k");
  extra(sweep, "--k-max", "task.k_max", "Largest k");
  extra(sweep, "--table-csv", "output.table_csv", "Per-k table CSV");
  add("gradcheck", "Finite-difference gradient check of a small model", cmd_gradcheck);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    RunConfig config = default_config(name);
    if (!config_path.empty()) apply_config_file(config, config_path);
    for (std::size_t i = 0; i < flag_values.size(); ++i) {
      if (flag_options[i]->count()) apply(config, flag_values[i].first->key, flag_values[i].second);
    }
    for (const auto& e : extras) {
      if (e->option->count()) apply(config, e->key, e->value);
    }
    if (no_header) config.data.has_header = false;
    if (no_pre_interp) config.task.pre_interpolate = false;
    if (flows) config.flows = true;
    if (config.task.input_len) config.model.input_len = config.task.input_len;
    config.train.validate();
    return commands.at(name)(config, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace perimid::cli
