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
#include <vector>

#include "perimid/autodiff.hpp"
#include "perimid/parameters.hpp"
#include "perimid/pyramid.hpp"

namespace perimid {

struct EncoderConfig {
  std::size_t layers = 1;
  std::size_t d_model = 16;
  std::size_t heads = 4;
  std::size_t ff_mult = 4;
  double dropout = 0.1;
  bool layer_norm = true;

  std::size_t head_dim() const { return d_model / heads; }
  void validate() const;
};

struct AttentionParams {
  ParamId query_weight, query_bias;
  // keys have no bias
  ParamId key_weight;
  ParamId value_weight, value_bias;
  ParamId output_weight, output_bias;
};

struct EncoderLayerParams {
  AttentionParams attention;
  // kNoParam when layer normalization is disabled.
  ParamId norm1_gain, norm1_bias;
  ParamId norm2_gain, norm2_bias;
  ParamId ff1_weight, ff1_bias;
  ParamId ff2_weight, ff2_bias;
};

/// Inverted dropout applied during training. A null rng disables it.
struct Dropout {
  double rate = 0.0;
  Rng* rng = nullptr;

  bool active() const { return rng != nullptr && rate > 0.0; }
  Var apply(const Var& x) const;
};

/// Multi-head attention restricted to the pairs the mask allows. Disallowed
/// logits get kMaskedLogit added before the softmax. Every diagonal entry of
/// the mask must be allowed.
Var ppam_attention(const Binding& bound, const Var& tokens, const AttentionMask& mask,
                   const AttentionParams& params, std::size_t heads);

/// Unmasked multi-head attention over the same parameters.
Var full_attention(const Binding& bound, const Var& tokens, const AttentionParams& params,
                   std::size_t heads);

/// Stack of pre-norm blocks:
///   x += Attn(Norm(x));  x += FF(Norm(x))   with FF = W2 GELU(W1 x).
class Encoder {
 public:
  Encoder() = default;
  Encoder(ParameterStore& store, EncoderConfig config, Rng& rng);

  /// A null mask runs periodic full attention (every token sees every token).
  Var encode(const Binding& bound, const Var& tokens, const AttentionMask* mask,
             const Dropout& dropout = {}) const;

  const EncoderConfig& config() const { return config_; }
  const std::vector<EncoderLayerParams>& layers() const { return layers_; }

 private:
  EncoderConfig config_;
  std::vector<EncoderLayerParams> layers_;
};

}  // namespace perimid
