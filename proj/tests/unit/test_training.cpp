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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "perimid/checkpoint.hpp"
#include "perimid/errors.hpp"
#include "perimid/training.hpp"

using namespace perimid;
namespace fs = std::filesystem;

namespace {

ModelConfig tiny() {
  ModelConfig cfg;
  cfg.input_len = 16;
  cfg.target_len = 4;
  cfg.channels = 1;
  cfg.k = 2;
  cfg.kernel = 5;
  cfg.encoder.d_model = 8;
  cfg.encoder.heads = 2;
  cfg.encoder.dropout = 0.0;
  return cfg;
}

std::vector<Sample> sine_samples(std::size_t n, std::size_t L, std::size_t T) {
  std::vector<Sample> out;
  for (std::size_t s = 0; s < n; ++s) {
    Tensor x({L, 1}), y({T, 1});
    for (std::size_t t = 0; t < L + T; ++t) {
      const double v = std::sin(2 * std::numbers::pi * static_cast<double>(t + 3 * s) / 8.0);
      if (t < L) x(t, 0) = v;
      else y(t - L, 0) = v;
    }
    out.push_back({x, y, {}, 0});
  }
  return out;
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("perimid_training_" + name);
}

bool same_parameters(const ParameterStore& a, const ParameterStore& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a.all()[i].value == b.all()[i].value)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("adam step examples") {
  AdamConfig cfg;
  cfg.lr = 1e-3;

  SUBCASE("zero gradient keeps parameters and decays moments") {
    std::vector<double> p{1.0, -2.0}, g{0.0, 0.0}, m{0.5, -0.5}, v{0.25, 0.04};
    adam_step(p, g, m, v, cfg, 3);
    CHECK(p[0] != 1.0);  // the decayed moment still moves it
    std::vector<double> p0{1.0, -2.0}, m0{0.0, 0.0}, v0{0.0, 0.0};
    adam_step(p0, g, m0, v0, cfg, 1);
    CHECK(p0 == std::vector<double>{1.0, -2.0});
    CHECK(m[0] == doctest::Approx(0.45));
    CHECK(v[1] == doctest::Approx(0.04 * 0.999));
  }
  SUBCASE("single step from zero moments") {
    for (double g0 : {3.0, -0.02, 1e-4}) {
      std::vector<double> p{0.0}, g{g0}, m{0.0}, v{0.0};
      adam_step(p, g, m, v, cfg, 1);
      // m_hat = g, v_hat = g^2
      const double want = -cfg.lr * g0 / (std::abs(g0) + cfg.eps);
      CHECK(std::abs(p[0] - want) < 1e-15);
    }
  }
  SUBCASE("constant gradient settles at lr times sign") {
    std::vector<double> p{0.0, 0.0}, g{0.7, -4.0}, m{0.0, 0.0}, v{0.0, 0.0};
    double prev0 = 0.0, prev1 = 0.0;
    for (std::size_t t = 1; t <= 2000; ++t) {
      prev0 = p[0];
      prev1 = p[1];
      adam_step(p, g, m, v, cfg, t);
    }
    CHECK(std::abs((p[0] - prev0) + cfg.lr) < 1e-9);
    CHECK(std::abs((p[1] - prev1) - cfg.lr) < 1e-9);
  }
  SUBCASE("errors") {
    std::vector<double> p{0.0}, g{std::numeric_limits<double>::quiet_NaN()}, m{0.0}, v{0.0};
    CHECK_THROWS_AS(adam_step(p, g, m, v, cfg, 1), NumericError);
    CHECK(p[0] == 0.0);
    std::vector<double> ok{1.0};
    CHECK_THROWS(adam_step(p, ok, m, v, cfg, 0));
  }
}

TEST_CASE("global norm clipping") {
  std::vector<Tensor> grads{Tensor({1, 2}, {3.0, 0.0}), Tensor({1, 1}, {4.0})};
  CHECK(clip_global_norm(grads, 1.0) == doctest::Approx(5.0));
  CHECK(grads[0](0, 0) == doctest::Approx(0.6));
  CHECK(grads[1](0, 0) == doctest::Approx(0.8));
  std::vector<Tensor> small{Tensor({1, 1}, {0.5})};
  clip_global_norm(small, 5.0);
  CHECK(small[0](0, 0) == 0.5);
  clip_global_norm(small, 0.0);
  CHECK(small[0](0, 0) == 0.5);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.lr = 0.0;
  CHECK_NOTHROW(cfg.validate());
  cfg.lr = 0.05;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.lr = 1e-3;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.batch_size = 4;
  cfg.beta2 = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(parse_loss_kind("smape") == LossKind::smape);
  CHECK_THROWS_AS(parse_loss_kind("hinge"), ConfigError);

  PeriMidFormer model(tiny());
  CHECK_THROWS_AS(train(model, std::vector<Sample>{}, TrainConfig{}), Error);
}

TEST_CASE("one sample overfits") {
  PeriMidFormer model(tiny());
  const auto data = sine_samples(1, 16, 4);
  TrainConfig cfg;
  cfg.lr = 5e-3;
  cfg.batch_size = 1;
  cfg.epochs = 500;
  const TrainResult r = train(model, data, cfg);
  CHECK(r.steps == 500);
  CHECK(r.losses.size() == 500);
  CHECK(evaluate_loss(model, data, LossKind::mse) < 1e-3);
}

TEST_CASE("frozen optimizer gives a flat curve") {
  PeriMidFormer model(tiny());
  const auto data = sine_samples(4, 16, 4);
  const PeriMidFormer before = model;
  TrainConfig cfg;
  cfg.lr = 0.0;
  cfg.batch_size = 4;
  cfg.epochs = 6;
  const TrainResult r = train(model, data, cfg);
  REQUIRE(r.losses.size() == 6);
  for (double l : r.losses) CHECK(l == r.losses.front());
  CHECK(same_parameters(model.parameters(), before.parameters()));
}

TEST_CASE("same seed gives the same curve") {
  auto run = [](std::uint64_t seed) {
    ModelConfig mc = tiny();
    mc.encoder.dropout = 0.1;
    PeriMidFormer model(mc);
    TrainConfig cfg;
    cfg.batch_size = 3;
    cfg.epochs = 4;
    cfg.seed = seed;
    return train(model, sine_samples(10, 16, 4), cfg).losses;
  };
  const auto a = run(7), b = run(7), c = run(8);
  CHECK(a == b);
  CHECK(a != c);
  for (double l : a) CHECK(std::isfinite(l));
}

TEST_CASE("max_steps stops early and a batch never exceeds the data") {
  PeriMidFormer model(tiny());
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 10;
  cfg.max_steps = 7;
  CHECK(train(model, sine_samples(10, 16, 4), cfg).steps == 7);
  cfg.max_steps = 0;
  cfg.epochs = 2;
  // 10 samples in batches of 4 -> 3 steps per epoch
  CHECK(train(model, sine_samples(10, 16, 4), cfg).steps == 6);
}

TEST_CASE("divergence restores the last good parameters") {
  // steps on samples 0 and 1 succeed, sample 2 blows up; the parameters
  // that last gave a finite loss are the ones after the first step
  auto data = sine_samples(3, 16, 4);
  data[2].target(0, 0) = std::numeric_limits<double>::infinity();
  TrainConfig cfg;
  cfg.batch_size = 1;
  cfg.epochs = 3;
  cfg.shuffle = false;
  cfg.checkpoint_path = temp_file("diverged.pmf").string();
  fs::remove(cfg.checkpoint_path);

  PeriMidFormer model(tiny());
  CHECK_THROWS_AS(train(model, data, cfg), TrainingDiverged);

  PeriMidFormer reference(tiny());
  TrainConfig one = cfg;
  one.checkpoint_path.clear();
  one.epochs = 1;
  train(reference, std::vector<Sample>{data[0]}, one);
  CHECK(same_parameters(model.parameters(), reference.parameters()));

  REQUIRE(fs::exists(cfg.checkpoint_path));
  const PeriMidFormer saved = load_checkpoint(cfg.checkpoint_path);
  CHECK(same_parameters(saved.parameters(), reference.parameters()));
  fs::remove(cfg.checkpoint_path);
}

TEST_CASE("other losses train") {
  SUBCASE("smape") {
    PeriMidFormer model(tiny());
    auto data = sine_samples(4, 16, 4);
    for (Sample& s : data) for (double& v : s.target.data()) v += 2.0;
    TrainConfig cfg;
    cfg.loss = LossKind::smape;
    cfg.lr = 5e-3;
    cfg.batch_size = 4;
    cfg.epochs = 60;
    const TrainResult r = train(model, data, cfg);
    CHECK(r.losses.back() < r.losses.front());
  }
  SUBCASE("cross entropy needs a classifier") {
    PeriMidFormer model(tiny());
    TrainConfig cfg;
    cfg.loss = LossKind::cross_entropy;
    CHECK_THROWS_AS(train(model, sine_samples(2, 16, 4), cfg), ConfigError);
  }
}

TEST_CASE("weights restrict the loss") {
  const PeriMidFormer model(tiny());
  auto data = sine_samples(1, 16, 4);
  Sample masked = data[0];
  masked.weight = Tensor({4, 1}, {1.0, 0.0, 0.0, 0.0});
  Sample shifted = masked;
  shifted.target(2, 0) += 100.0;
  CHECK(evaluate_loss(model, std::vector<Sample>{masked}, LossKind::mse) ==
        evaluate_loss(model, std::vector<Sample>{shifted}, LossKind::mse));
}

TEST_CASE("every parameter block is trained") {
  for (TaskKind task : {TaskKind::forecast, TaskKind::impute, TaskKind::classify}) {
    ModelConfig mc = tiny();
    mc.task = task;
    mc.k = 3;
    mc.channels = 2;
    mc.encoder.layers = 2;
    PeriMidFormer model(mc);
    oracle::Rng rng(71);
    std::vector<Sample> data;
    for (std::size_t i = 0; i < 4; ++i) {
      Tensor target;
      if (task != TaskKind::classify) target = oracle::random_tensor(model.config().output_len(), 2, rng);
      data.push_back({oracle::random_tensor(16, 2, rng), target, {}, i % 2});
    }
    const PeriMidFormer before = model;
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.epochs = 1;
    cfg.clip_norm = 0.0;
    if (task == TaskKind::classify) cfg.loss = LossKind::cross_entropy;
    train(model, data, cfg);
    for (std::size_t i = 0; i < model.parameters().size(); ++i) {
      CAPTURE(model.parameters().all()[i].name);
      CHECK_FALSE(model.parameters().all()[i].value == before.parameters().all()[i].value);
    }
  }
}

TEST_CASE("checkpoint round trip") {
  ModelConfig mc = tiny();
  mc.frozen_frequencies = {1, 4};
  mc.init_seed = 5;
  PeriMidFormer model(mc);
  TrainConfig cfg;
  cfg.epochs = 2;
  train(model, sine_samples(3, 16, 4), cfg);

  const fs::path path = temp_file("roundtrip.pmf");
  save_checkpoint(model, path);
  const PeriMidFormer back = load_checkpoint(path);
  CHECK(to_json(back.config()) == to_json(model.config()));
  CHECK(same_parameters(back.parameters(), model.parameters()));
  const Tensor x = sine_samples(1, 16, 4)[0].input;
  CHECK(back.predict(x) == model.predict(x));

  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    bytes = ss.str();
  }
  CHECK(bytes.substr(0, 4) == "PMF1");
  auto write = [&](const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
  };
  write("XXXX" + bytes.substr(4));
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
  write(bytes.substr(0, bytes.size() - 8));
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
  write(bytes.substr(0, 10));
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
  fs::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
}

TEST_CASE("loss curve CSV") {
  const fs::path path = temp_file("loss.csv");
  write_loss_curve_csv(path, std::vector<double>{0.5, 0.25});
  std::ifstream in(path);
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  CHECK(header == "step,loss");
  CHECK(first.rfind("1,0.5", 0) == 0);
  CHECK(second.rfind("2,0.25", 0) == 0);
  fs::remove(path);
}
