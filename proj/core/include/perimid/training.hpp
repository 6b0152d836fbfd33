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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "perimid/errors.hpp"
#include "perimid/model.hpp"
#include "perimid/parameters.hpp"
#include "perimid/tensor.hpp"

namespace perimid {

enum class LossKind { mse, smape, cross_entropy };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One Adam update of a flat parameter block at step t >= 1:
///   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2,
///   p -= lr * m_hat / (sqrt(v_hat) + eps)  with bias-corrected m_hat, v_hat.
/// Throws NumericError on a non-finite gradient, before touching anything.
void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
               std::span<double> v, const AdamConfig& config, std::size_t t);

class Adam {
 public:
  Adam(ParameterStore& store, AdamConfig config);

  /// Applies one step with one gradient tensor per parameter block.
  void step(std::span<const Tensor> grads);
  std::size_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  ParameterStore* store_;
  AdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::size_t t_ = 0;
};

/// Rescales all gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping. max_norm <= 0 disables clipping.
double clip_global_norm(std::vector<Tensor>& grads, double max_norm);

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 8;
  std::size_t epochs = 10;
  /// Stops after this many optimizer steps when nonzero.
  std::size_t max_steps = 0;
  LossKind loss = LossKind::mse;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;
  bool shuffle = true;
  /// Written after training (and on divergence, with the last good weights).
  std::string checkpoint_path;

  AdamConfig adam() const { return {lr, beta1, beta2, eps}; }
  void validate() const;
};

/// One training example. `weight` (optional, same shape as target) restricts
/// the MSE to the entries with nonzero weight; `label` is used by the
/// cross-entropy loss.
struct Sample {
  Tensor input;
  Tensor target;
  Tensor weight;
  std::size_t label = 0;
};

struct TrainResult {
  /// Mean batch loss per optimizer step.
  std::vector<double> losses;
  std::size_t steps = 0;
};

class TrainingDiverged : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Per-sample loss on the model's task head.
Var sample_loss(const PeriMidFormer& model, const Binding& bound, const Sample& sample,
                LossKind loss, const Dropout& dropout = {});

/// Mini-batch Adam with global-norm clipping. Deterministic for a fixed
/// seed. On a non-finite loss the last parameters that gave a finite loss
/// and gradient are restored (and checkpointed when a path is set) before
/// TrainingDiverged is thrown.
TrainResult train(PeriMidFormer& model, std::span<const Sample> data, const TrainConfig& config);

/// Mean task loss over a dataset without dropout or updates.
double evaluate_loss(const PeriMidFormer& model, std::span<const Sample> data, LossKind loss);

/// Writes "step,loss" rows.
void write_loss_curve_csv(const std::filesystem::path& path, std::span<const double> losses);

}  // namespace perimid
