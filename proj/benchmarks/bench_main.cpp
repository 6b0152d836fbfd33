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

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "perimid/autodiff.hpp"
#include "perimid/model.hpp"
#include "perimid/pyramid.hpp"
#include "perimid/spectral.hpp"

using namespace perimid;

namespace {

Tensor tones(std::size_t L, std::size_t C) {
  Tensor x({L, C});
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      const double s = static_cast<double>(t);
      x(t, c) = std::sin(2 * std::numbers::pi * 4 * s / static_cast<double>(L)) +
                0.5 * std::sin(2 * std::numbers::pi * 12 * s / static_cast<double>(L) + c);
    }
  }
  return x;
}

ModelConfig bench_config(std::size_t L) {
  ModelConfig cfg;
  cfg.input_len = L;
  cfg.target_len = L / 4;
  cfg.channels = 4;
  cfg.k = 3;
  cfg.encoder.d_model = 16;
  cfg.encoder.heads = 4;
  cfg.encoder.dropout = 0.0;
  return cfg;
}

void BM_Spectrum(benchmark::State& state) {
  const Tensor x = tones(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(amplitude_spectrum(x));
}
BENCHMARK(BM_Spectrum)->Arg(96)->Arg(336)->Arg(720);

void BM_BuildPyramid(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const PeriodSet periods = detect_periods(tones(L, 1), 4);
  for (auto _ : state) benchmark::DoNotOptimize(build_pyramid(periods));
}
BENCHMARK(BM_BuildPyramid)->Arg(96)->Arg(336)->Arg(720);

void BM_Forward(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const PeriMidFormer model(bench_config(L));
  const Tensor x = tones(L, 4);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(x));
}
BENCHMARK(BM_Forward)->Arg(96)->Arg(336);

void BM_ForwardBackward(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const PeriMidFormer model(bench_config(L));
  const Tensor x = tones(L, 4);
  const Tensor target({L / 4, 4}, 0.1);
  for (auto _ : state) {
    Tape tape;
    const Binding b(tape, model.parameters(), true);
    tape.backward(mse_loss(model.reconstruct(b, x), target));
    benchmark::DoNotOptimize(b.gradients());
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(96)->Arg(336);

void BM_FullAttentionForward(benchmark::State& state) {
  ModelConfig cfg = bench_config(static_cast<std::size_t>(state.range(0)));
  cfg.attention = AttentionMode::full;
  const PeriMidFormer model(cfg);
  const Tensor x = tones(cfg.input_len, 4);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(x));
}
BENCHMARK(BM_FullAttentionForward)->Arg(96)->Arg(336);

}  // namespace

BENCHMARK_MAIN();
