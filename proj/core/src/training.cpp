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

#include "perimid/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "perimid/checkpoint.hpp"

namespace perimid {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::mse: return "mse";
    case LossKind::smape: return "smape";
    case LossKind::cross_entropy: return "cross_entropy";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "mse") return LossKind::mse;
  if (name == "smape") return LossKind::smape;
  if (name == "cross_entropy") return LossKind::cross_entropy;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
               std::span<double> v, const AdamConfig& config, std::size_t t) {
  if (t == 0) throw ConfigError("adam_step: step counter starts at 1");
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment sizes differ");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("adam_step: non-finite gradient " + std::to_string(grads[i]) +
                         " at index " + std::to_string(i) + ", step " + std::to_string(t));
    }
  }
  const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grads[i];
    v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    params[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

Adam::Adam(ParameterStore& store, AdamConfig config) : store_(&store), config_(config) {
  for (const Parameter& p : store.all()) {
    m_.emplace_back(p.value.shape(), 0.0);
    v_.emplace_back(p.value.shape(), 0.0);
  }
}

void Adam::step(std::span<const Tensor> grads) {
  if (grads.size() != store_->size()) throw ShapeError("Adam: one gradient per block required");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].all_finite()) {
      throw NumericError("Adam: non-finite gradient in block '" + (*store_)[i].name + "'");
    }
  }
  ++t_;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    adam_step(store_->value(i).data(), grads[i].data(), m_[i].data(), v_[i].data(), config_, t_);
  }
}

double clip_global_norm(std::vector<Tensor>& grads, double max_norm) {
  double total = 0.0;
  for (const Tensor& g : grads)
    for (double v : g.data()) total += v * v;
  const double norm = std::sqrt(total);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (Tensor& g : grads)
      for (double& v : g.data()) v *= factor;
  }
  return norm;
}

void TrainConfig::validate() const {
  if (!(lr == 0.0 || (lr >= 1e-5 && lr <= 1e-2))) {
    throw ConfigError("train: lr must be 0 (frozen) or lie in [1e-5, 1e-2], got " +
                      std::to_string(lr));
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train: Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("train: Adam eps must be positive");
  if (batch_size == 0) throw ConfigError("train: batch_size must be at least 1");
  if (epochs == 0 && max_steps == 0) throw ConfigError("train: epochs must be at least 1");
}

Var sample_loss(const PeriMidFormer& model, const Binding& bound, const Sample& sample,
                LossKind loss, const Dropout& dropout) {
  if (model.config().task == TaskKind::classify) {
    if (loss != LossKind::cross_entropy) {
      throw ConfigError("classification trains with the cross_entropy loss");
    }
    return cross_entropy_loss(model.logits(bound, sample.input, dropout), sample.label);
  }
  const Var pred = model.reconstruct(bound, sample.input, dropout);
  switch (loss) {
    case LossKind::mse: return mse_loss(pred, sample.target, sample.weight);
    case LossKind::smape: return smape_loss(pred, sample.target);
    case LossKind::cross_entropy: break;
  }
  throw ConfigError("cross_entropy loss requires a classification model");
}

TrainResult train(PeriMidFormer& model, std::span<const Sample> data, const TrainConfig& config) {
  config.validate();
  if (data.empty()) throw DataError("train: dataset is empty");

  Rng rng(config.seed);
  Adam optimizer(model.parameters(), config.adam());
  const double dropout_rate = model.config().encoder.dropout;
  const Dropout dropout{dropout_rate, &rng};

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  std::vector<Parameter> last_good(model.parameters().all().begin(),
                                   model.parameters().all().end());
  auto diverged = [&](const std::string& why) {
    for (std::size_t i = 0; i < last_good.size(); ++i) {
      model.parameters().value(i) = last_good[i].value;
    }
    if (!config.checkpoint_path.empty()) save_checkpoint(model, config.checkpoint_path);
    throw TrainingDiverged("train: " + why + " at step " + std::to_string(result.steps + 1) +
                           "; parameters restored to the last good step");
  };

  const std::size_t epochs = config.epochs == 0 ? SIZE_MAX : config.epochs;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      if (config.max_steps && result.steps >= config.max_steps) break;
      const std::size_t end = std::min(start + config.batch_size, order.size());

      Tape tape;
      Binding bound(tape, model.parameters(), true);
      std::vector<Var> losses;
      losses.reserve(end - start);
      try {
        for (std::size_t i = start; i < end; ++i) {
          losses.push_back(sample_loss(model, bound, data[order[i]], config.loss, dropout));
        }
      } catch (const NumericError& e) {
        diverged(std::string("non-finite forward pass (") + e.what() + ")");
      }
      const Var total = losses.size() == 1
                            ? losses[0]
                            : scale(sum_all(concat_cols(losses)),
                                    1.0 / static_cast<double>(losses.size()));
      const double loss_value = total.value()[0];
      if (!std::isfinite(loss_value)) diverged("non-finite loss");
      tape.backward(total);
      std::vector<Tensor> grads = bound.gradients();
      clip_global_norm(grads, config.clip_norm);
      for (const Tensor& g : grads) {
        if (!g.all_finite()) diverged("non-finite gradient");
      }

      for (std::size_t i = 0; i < last_good.size(); ++i) {
        last_good[i].value = model.parameters().value(i);
      }
      optimizer.step(grads);
      result.losses.push_back(loss_value);
      ++result.steps;
    }
    if (config.max_steps && result.steps >= config.max_steps) break;
  }
  if (!config.checkpoint_path.empty()) save_checkpoint(model, config.checkpoint_path);
  return result;
}

double evaluate_loss(const PeriMidFormer& model, std::span<const Sample> data, LossKind loss) {
  if (data.empty()) throw DataError("evaluate_loss: dataset is empty");
  double total = 0.0;
  for (const Sample& s : data) {
    Tape tape;
    Binding bound(tape, model.parameters(), false);
    total += sample_loss(model, bound, s, loss).value()[0];
  }
  return total / static_cast<double>(data.size());
}

void write_loss_curve_csv(const std::filesystem::path& path, std::span<const double> losses) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write loss curve to " + path.string());
  out.precision(17);
  out << "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) out << (i + 1) << ',' << losses[i] << '\n';
}

}  // namespace perimid
