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
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "perimid/autodiff.hpp"
#include "perimid/encoder.hpp"
#include "perimid/flows.hpp"
#include "perimid/parameters.hpp"
#include "perimid/preprocessing.hpp"
#include "perimid/pyramid.hpp"
#include "perimid/spectral.hpp"

namespace perimid {

enum class TaskKind { forecast, impute, anomaly, classify };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);

/// ppam restricts attention to the pyramid mask; full lets every component
/// attend every other (the masking ablation).
enum class AttentionMode { ppam, full };

std::string_view to_string(AttentionMode mode);
AttentionMode parse_attention_mode(std::string_view name);

struct ModelConfig {
  TaskKind task = TaskKind::forecast;
  std::size_t input_len = 96;
  /// Forecast horizon. Reconstruction tasks (impute, anomaly) use input_len.
  std::size_t target_len = 96;
  std::size_t channels = 1;
  std::size_t k = 3;
  std::size_t kernel = kDefaultMovingAverageKernel;
  EncoderConfig encoder;
  AttentionMode attention = AttentionMode::ppam;
  std::size_t num_classes = 2;
  std::size_t max_flows = kDefaultMaxFlows;
  /// When non-empty every window uses this PeriodSet instead of its own
  /// spectrum. Must start with 1.
  std::vector<std::size_t> frozen_frequencies;
  std::uint64_t init_seed = 0;

  std::size_t output_len() const;
  std::size_t max_tokens() const { return max_token_count(input_len, k); }
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Records which pipeline stages ran, in order.
struct Trace {
  std::vector<std::string> stages;

  void mark(std::string stage) { stages.push_back(std::move(stage)); }
  bool contains(std::string_view stage) const;
};

/// The full network: pyramid embedding, masked encoder and a task head.
///
/// Reconstruction tasks normalize, split off the trend, run the pyramid over
/// the seasonal part channel by channel, aggregate feature flows, add a
/// linear projection of the trend and de-normalize. Classification runs the
/// pyramid on the normalized raw series and projects all encoded tokens to
/// class logits.
class PeriMidFormer {
 public:
  explicit PeriMidFormer(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }

  /// T x C prediction in the input's scale (forecast, impute, anomaly).
  Var reconstruct(const Binding& bound, const Tensor& x, const Dropout& dropout = {},
                  Trace* trace = nullptr) const;
  /// 1 x num_classes logits (classify).
  Var logits(const Binding& bound, const Tensor& x, const Dropout& dropout = {},
             Trace* trace = nullptr) const;

  /// Inference helpers on a private tape. Safe to call from several threads.
  Tensor predict(const Tensor& x, Trace* trace = nullptr) const;
  Tensor predict_logits(const Tensor& x, Trace* trace = nullptr) const;
  std::size_t predict_class(const Tensor& x) const;

  /// Frozen periods when configured, else the top-k of the spectrum.
  PeriodSet periods_for(const Tensor& seasonal) const;

  void zero_parameters();

  const TokenEmbedding& embedding() const { return embedding_; }
  const Encoder& encoder() const { return encoder_; }
  const FlowHead& flow_head() const { return flow_head_; }
  ParamId trend_weight() const { return trend_weight_; }
  ParamId trend_bias() const { return trend_bias_; }

 private:
  void check_input(const Tensor& x) const;
  Var encode_channel(const Binding& bound, const Tensor& series, std::size_t channel,
                     const PeriodicPyramid& pyramid, const Dropout& dropout) const;

  ModelConfig config_;
  ParameterStore params_;
  TokenEmbedding embedding_;
  Encoder encoder_;
  FlowHead flow_head_;
  ParamId trend_weight_ = kNoParam;
  ParamId trend_bias_ = kNoParam;
  ParamId class_weight_ = kNoParam;
  ParamId class_bias_ = kNoParam;
};

}  // namespace perimid
