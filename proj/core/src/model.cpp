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

#include "perimid/model.hpp"

#include <algorithm>
#include <cmath>

#include "perimid/errors.hpp"

namespace perimid {

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::forecast: return "forecast";
    case TaskKind::impute: return "impute";
    case TaskKind::anomaly: return "anomaly";
    case TaskKind::classify: return "classify";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "forecast") return TaskKind::forecast;
  if (name == "impute") return TaskKind::impute;
  if (name == "anomaly") return TaskKind::anomaly;
  if (name == "classify") return TaskKind::classify;
  throw ConfigError("unknown task kind '" + std::string(name) + "'");
}

std::string_view to_string(AttentionMode mode) {
  return mode == AttentionMode::ppam ? "ppam" : "full";
}

AttentionMode parse_attention_mode(std::string_view name) {
  if (name == "ppam") return AttentionMode::ppam;
  if (name == "full") return AttentionMode::full;
  throw ConfigError("unknown attention mode '" + std::string(name) + "'");
}

std::size_t ModelConfig::output_len() const {
  switch (task) {
    case TaskKind::forecast: return target_len;
    case TaskKind::impute:
    case TaskKind::anomaly: return input_len;
    case TaskKind::classify: return 0;
  }
  return 0;
}

void ModelConfig::validate() const {
  encoder.validate();
  if (input_len < 4) throw ConfigError("model: input_len must be at least 4");
  if (channels == 0) throw ConfigError("model: channels must be at least 1");
  if (k < 2) throw ConfigError("model: k must be at least 2");
  if (k > ceil_div(input_len, 2)) {
    throw ConfigError("model: k=" + std::to_string(k) + " is too large for input_len=" +
                      std::to_string(input_len));
  }
  if (task == TaskKind::forecast && target_len == 0) {
    throw ConfigError("model: forecast target_len must be at least 1");
  }
  if (task == TaskKind::classify && num_classes < 2) {
    throw ConfigError("model: classification needs at least 2 classes");
  }
  if (task != TaskKind::classify && (kernel % 2 == 0 || kernel > 2 * input_len - 1)) {
    throw ConfigError("model: moving-average kernel must be odd and at most 2L-1");
  }
  if (!frozen_frequencies.empty()) {
    if (frozen_frequencies.size() != k) {
      throw ConfigError("model: frozen_frequencies must list exactly k frequencies");
    }
    period_set_from_frequencies(frozen_frequencies, input_len);
  }
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"task", to_string(c.task)},
          {"input_len", c.input_len},
          {"target_len", c.target_len},
          {"channels", c.channels},
          {"k", c.k},
          {"kernel", c.kernel},
          {"layers", c.encoder.layers},
          {"d_model", c.encoder.d_model},
          {"heads", c.encoder.heads},
          {"ff_mult", c.encoder.ff_mult},
          {"dropout", c.encoder.dropout},
          {"layer_norm", c.encoder.layer_norm},
          {"attention", to_string(c.attention)},
          {"num_classes", c.num_classes},
          {"max_flows", c.max_flows},
          {"frozen_frequencies", c.frozen_frequencies},
          {"init_seed", c.init_seed}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.task = parse_task_kind(j.at("task").get<std::string>());
    c.input_len = j.at("input_len").get<std::size_t>();
    c.target_len = j.at("target_len").get<std::size_t>();
    c.channels = j.at("channels").get<std::size_t>();
    c.k = j.at("k").get<std::size_t>();
    c.kernel = j.at("kernel").get<std::size_t>();
    c.encoder.layers = j.at("layers").get<std::size_t>();
    c.encoder.d_model = j.at("d_model").get<std::size_t>();
    c.encoder.heads = j.at("heads").get<std::size_t>();
    c.encoder.ff_mult = j.at("ff_mult").get<std::size_t>();
    c.encoder.dropout = j.at("dropout").get<double>();
    c.encoder.layer_norm = j.at("layer_norm").get<bool>();
    c.attention = parse_attention_mode(j.at("attention").get<std::string>());
    c.num_classes = j.at("num_classes").get<std::size_t>();
    c.max_flows = j.at("max_flows").get<std::size_t>();
    c.frozen_frequencies = j.at("frozen_frequencies").get<std::vector<std::size_t>>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
}

bool Trace::contains(std::string_view stage) const {
  return std::find(stages.begin(), stages.end(), stage) != stages.end();
}

PeriMidFormer::PeriMidFormer(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  Rng rng(config_.init_seed);
  const std::size_t d = config_.encoder.d_model;
  embedding_ = TokenEmbedding(params_, config_.input_len, d, config_.max_tokens(), rng);
  encoder_ = Encoder(params_, config_.encoder, rng);
  if (config_.task == TaskKind::classify) {
    const std::size_t width = config_.channels * config_.max_tokens() * d;
    const double bound = 1.0 / std::sqrt(static_cast<double>(width));
    class_weight_ = params_.add("classifier.weight",
                                uniform_init({width, config_.num_classes}, bound, rng));
    class_bias_ = params_.add("classifier.bias", uniform_init({1, config_.num_classes}, bound, rng));
  } else {
    const std::size_t out = config_.output_len();
    flow_head_ = FlowHead(params_, config_.k, d, out, rng);
    const double bound = 1.0 / std::sqrt(static_cast<double>(config_.input_len));
    trend_weight_ = params_.add("trend.weight", uniform_init({config_.input_len, out}, bound, rng));
    trend_bias_ = params_.add("trend.bias", uniform_init({1, out}, bound, rng));
  }
}

void PeriMidFormer::check_input(const Tensor& x) const {
  if (x.rank() != 2 || x.rows() != config_.input_len || x.cols() != config_.channels) {
    throw ShapeError("model input must be " + std::to_string(config_.input_len) + " x " +
                     std::to_string(config_.channels) + ", got " + to_string(x.shape()));
  }
}

PeriodSet PeriMidFormer::periods_for(const Tensor& seasonal) const {
  if (!config_.frozen_frequencies.empty()) {
    return period_set_from_frequencies(config_.frozen_frequencies, config_.input_len);
  }
  return detect_periods(seasonal, config_.k);
}

Var PeriMidFormer::encode_channel(const Binding& bound, const Tensor& series, std::size_t channel,
                                  const PeriodicPyramid& pyramid, const Dropout& dropout) const {
  std::vector<double> column(series.rows());
  for (std::size_t t = 0; t < series.rows(); ++t) column[t] = series(t, channel);
  const Tensor padded = pad_components(column, pyramid.layout);
  const Var tokens = embedding_.embed(bound, padded);
  const AttentionMask* mask = config_.attention == AttentionMode::ppam ? &pyramid.mask : nullptr;
  return encoder_.encode(bound, tokens, mask, dropout);
}

Var PeriMidFormer::reconstruct(const Binding& bound, const Tensor& x, const Dropout& dropout,
                               Trace* trace) const {
  if (config_.task == TaskKind::classify) {
    throw ConfigError("reconstruct: model was built for classification");
  }
  check_input(x);
  auto mark = [trace](const char* stage) {
    if (trace) trace->mark(stage);
  };
  Tape& tape = bound.tape();

  mark("normalize");
  const NormalizedSeries norm = normalize(x);
  mark("decompose");
  const DecompositionResult parts = decompose(norm.values, config_.kernel);
  mark("spectral");
  const PeriodicPyramid pyramid = build_pyramid(periods_for(parts.seasonal));
  mark("pyramid");
  const std::vector<FeatureFlow> flows =
      enumerate_flows(pyramid.relation, pyramid.layout, config_.max_flows);

  std::vector<Var> rows;
  rows.reserve(config_.channels);
  for (std::size_t c = 0; c < config_.channels; ++c) {
    const Var encoded = encode_channel(bound, parts.seasonal, c, pyramid, dropout);
    const Var seasonal_out = flow_head_.aggregate(bound, encoded, flows);

    Tensor trend_row({1, config_.input_len});
    for (std::size_t t = 0; t < config_.input_len; ++t) trend_row[t] = parts.trend(t, c);
    const Var trend_out =
        add_row(matmul(tape.constant(trend_row), bound[trend_weight_]), bound[trend_bias_]);

    const Var combined = add(seasonal_out, trend_out);
    const Var restored = add_const(scale(combined, norm.stats.sigma[c]),
                                   Tensor(combined.value().shape(), norm.stats.mu[c]));
    rows.push_back(restored);
  }
  mark("encoder");
  mark("flows");
  mark("trend");
  mark("denormalize");
  const Var stacked = rows.size() == 1 ? rows[0] : concat_rows(rows);
  return transpose(stacked);
}

Var PeriMidFormer::logits(const Binding& bound, const Tensor& x, const Dropout& dropout,
                          Trace* trace) const {
  if (config_.task != TaskKind::classify) {
    throw ConfigError("logits: model was not built for classification");
  }
  check_input(x);
  auto mark = [trace](const char* stage) {
    if (trace) trace->mark(stage);
  };
  Tape& tape = bound.tape();

  mark("normalize");
  const NormalizedSeries norm = normalize(x);
  mark("spectral");
  const PeriodicPyramid pyramid = build_pyramid(periods_for(norm.values));
  mark("pyramid");

  const std::size_t d = config_.encoder.d_model;
  const std::size_t n = pyramid.layout.token_count();
  const std::size_t pad = (config_.max_tokens() - n) * d;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  // Channel-major, then token order; tokens beyond this pyramid's count are zeros.
  std::vector<Var> pieces;
  for (std::size_t c = 0; c < config_.channels; ++c) {
    const Var encoded = encode_channel(bound, norm.values, c, pyramid, dropout);
    pieces.push_back(gather_concat_rows(encoded, {order}));
    if (pad > 0) pieces.push_back(tape.constant(Tensor({1, pad}, 0.0)));
  }
  mark("encoder");
  mark("classifier");
  const Var features = pieces.size() == 1 ? pieces[0] : concat_cols(pieces);
  return add_row(matmul(features, bound[class_weight_]), bound[class_bias_]);
}

Tensor PeriMidFormer::predict(const Tensor& x, Trace* trace) const {
  Tape tape;
  Binding bound(tape, params_, false);
  return reconstruct(bound, x, {}, trace).value();
}

Tensor PeriMidFormer::predict_logits(const Tensor& x, Trace* trace) const {
  Tape tape;
  Binding bound(tape, params_, false);
  return logits(bound, x, {}, trace).value();
}

std::size_t PeriMidFormer::predict_class(const Tensor& x) const {
  const Tensor z = predict_logits(x);
  const auto data = z.data();
  return static_cast<std::size_t>(std::max_element(data.begin(), data.end()) - data.begin());
}

void PeriMidFormer::zero_parameters() {
  for (Parameter& p : params_.all()) p.value.fill(0.0);
}

}  // namespace perimid
