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

#include "perimid/encoder.hpp"

#include <cmath>
#include <string>

#include "perimid/errors.hpp"

namespace perimid {

void EncoderConfig::validate() const {
  if (layers == 0) throw ConfigError("encoder: layers must be at least 1");
  if (d_model == 0) throw ConfigError("encoder: d_model must be at least 1");
  if (heads == 0 || d_model % heads != 0) {
    throw ConfigError("encoder: heads (" + std::to_string(heads) + ") must divide d_model (" +
                      std::to_string(d_model) + ")");
  }
  if (ff_mult == 0) throw ConfigError("encoder: ff_mult must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("encoder: dropout must lie in [0, 1)");
}

Var Dropout::apply(const Var& x) const {
  if (!active()) return x;
  Tensor keep(x.value().shape());
  std::bernoulli_distribution draw(1.0 - rate);
  const double scale_kept = 1.0 / (1.0 - rate);
  for (double& v : keep.data()) v = draw(*rng) ? scale_kept : 0.0;
  return mul_const(x, keep);
}

namespace {

Var attend(const Binding& bound, const Var& x, const Tensor* bias, const AttentionParams& p,
           std::size_t heads) {
  const std::size_t d_model = x.cols();
  const std::size_t head_dim = d_model / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const Var q = add_row(matmul(x, bound[p.query_weight]), bound[p.query_bias]);
  const Var k = matmul(x, bound[p.key_weight]);
  const Var v = add_row(matmul(x, bound[p.value_weight]), bound[p.value_bias]);
  std::vector<Var> outputs;
  outputs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Var qh = slice_cols(q, h * head_dim, head_dim);
    const Var kh = slice_cols(k, h * head_dim, head_dim);
    const Var vh = slice_cols(v, h * head_dim, head_dim);
    Var scores = scale(matmul(qh, transpose(kh)), inv_scale);
    if (bias) scores = add_const(scores, *bias);
    outputs.push_back(matmul(softmax_rows(scores), vh));
  }
  const Var merged = heads == 1 ? outputs[0] : concat_cols(outputs);
  return add_row(matmul(merged, bound[p.output_weight]), bound[p.output_bias]);
}

void check_heads(const Var& tokens, std::size_t heads) {
  if (heads == 0 || tokens.cols() % heads != 0) {
    throw ConfigError("attention: heads must divide the token width");
  }
}

AttentionParams make_attention(ParameterStore& store, const std::string& prefix,
                               std::size_t d_model, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_model));
  auto weight = [&](const char* name) {
    return store.add(prefix + name, uniform_init({d_model, d_model}, bound, rng));
  };
  auto bias = [&](const char* name) {
    return store.add(prefix + name, uniform_init({1, d_model}, bound, rng));
  };
  AttentionParams p{};
  p.query_weight = weight("query.weight");
  p.query_bias = bias("query.bias");
  p.key_weight = weight("key.weight");
  p.value_weight = weight("value.weight");
  p.value_bias = bias("value.bias");
  p.output_weight = weight("output.weight");
  p.output_bias = bias("output.bias");
  return p;
}

}  // namespace

Var ppam_attention(const Binding& bound, const Var& tokens, const AttentionMask& mask,
                   const AttentionParams& params, std::size_t heads) {
  check_heads(tokens, heads);
  if (mask.size() != tokens.rows()) {
    throw ShapeError("ppam_attention: mask is " + std::to_string(mask.size()) + " wide for " +
                     std::to_string(tokens.rows()) + " tokens");
  }
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask(i, i)) {
      throw ConfigError("ppam_attention: token " + std::to_string(i) + " may not attend itself");
    }
  }
  const Tensor bias = mask.additive_bias();
  return attend(bound, tokens, &bias, params, heads);
}

Var full_attention(const Binding& bound, const Var& tokens, const AttentionParams& params,
                   std::size_t heads) {
  check_heads(tokens, heads);
  return attend(bound, tokens, nullptr, params, heads);
}

Encoder::Encoder(ParameterStore& store, EncoderConfig config, Rng& rng)
    : config_(std::move(config)) {
  config_.validate();
  const std::size_t d = config_.d_model, hidden = config_.d_model * config_.ff_mult;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string prefix = "encoder." + std::to_string(l) + ".";
    EncoderLayerParams layer{};
    layer.attention = make_attention(store, prefix + "attention.", d, rng);
    layer.norm1_gain = layer.norm1_bias = layer.norm2_gain = layer.norm2_bias = kNoParam;
    if (config_.layer_norm) {
      layer.norm1_gain = store.add(prefix + "norm1.gain", Tensor({1, d}, 1.0));
      layer.norm1_bias = store.add(prefix + "norm1.bias", Tensor({1, d}, 0.0));
      layer.norm2_gain = store.add(prefix + "norm2.gain", Tensor({1, d}, 1.0));
      layer.norm2_bias = store.add(prefix + "norm2.bias", Tensor({1, d}, 0.0));
    }
    const double b1 = 1.0 / std::sqrt(static_cast<double>(d));
    const double b2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    layer.ff1_weight = store.add(prefix + "ff1.weight", uniform_init({d, hidden}, b1, rng));
    layer.ff1_bias = store.add(prefix + "ff1.bias", uniform_init({1, hidden}, b1, rng));
    layer.ff2_weight = store.add(prefix + "ff2.weight", uniform_init({hidden, d}, b2, rng));
    layer.ff2_bias = store.add(prefix + "ff2.bias", uniform_init({1, d}, b2, rng));
    layers_.push_back(layer);
  }
}

Var Encoder::encode(const Binding& bound, const Var& tokens, const AttentionMask* mask,
                    const Dropout& dropout) const {
  if (tokens.cols() != config_.d_model) {
    throw ShapeError("encode: tokens are " + std::to_string(tokens.cols()) + " wide, d_model is " +
                     std::to_string(config_.d_model));
  }
  Var x = tokens;
  for (const EncoderLayerParams& layer : layers_) {
    Var h = config_.layer_norm
                ? layer_norm_rows(x, bound[layer.norm1_gain], bound[layer.norm1_bias])
                : x;
    h = mask ? ppam_attention(bound, h, *mask, layer.attention, config_.heads)
             : full_attention(bound, h, layer.attention, config_.heads);
    x = add(x, dropout.apply(h));

    h = config_.layer_norm
            ? layer_norm_rows(x, bound[layer.norm2_gain], bound[layer.norm2_bias])
            : x;
    h = gelu(add_row(matmul(h, bound[layer.ff1_weight]), bound[layer.ff1_bias]));
    h = add_row(matmul(h, bound[layer.ff2_weight]), bound[layer.ff2_bias]);
    x = add(x, dropout.apply(h));
  }
  return x;
}

}  // namespace perimid
