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

#include "perimid/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numeric>

#include "perimid/errors.hpp"

namespace perimid {

namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealForwardPlan {
 public:
  explicit RealForwardPlan(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealForwardPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealForwardPlan(const RealForwardPlan&) = delete;
  RealForwardPlan& operator=(const RealForwardPlan&) = delete;

  double* input() { return in_; }
  void execute() { fftw_execute(plan_); }
  // |X_j| for any 0 <= j < n via conjugate symmetry.
  double magnitude(std::size_t j) const {
    const std::size_t idx = j <= n_ / 2 ? j : n_ - j;
    return std::hypot(out_[idx][0], out_[idx][1]);
  }

 private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

}  // namespace

void PeriodSet::validate() const {
  const std::size_t kk = frequencies.size();
  if (kk < 2) throw ConfigError("PeriodSet: k must be at least 2");
  if (periods.size() != kk || amplitudes.size() != kk) throw ConfigError("PeriodSet: ragged");
  if (frequencies[0] != 1) throw ConfigError("PeriodSet: first frequency must be 1");
  const std::size_t fmax = ceil_div(length, 2);
  for (std::size_t i = 0; i < kk; ++i) {
    if (frequencies[i] == 0 || frequencies[i] > fmax) {
      throw ConfigError("PeriodSet: frequency " + std::to_string(frequencies[i]) +
                        " outside [1, " + std::to_string(fmax) + "]");
    }
    if (periods[i] != ceil_div(length, frequencies[i])) {
      throw ConfigError("PeriodSet: period does not match ceil(L/f)");
    }
    if (i > 0 && !(frequencies[i] > frequencies[i - 1] && periods[i] < periods[i - 1])) {
      throw ConfigError("PeriodSet: frequencies must ascend and periods strictly descend");
    }
  }
}

nlohmann::json to_json(const PeriodSet& p) {
  return {{"length", p.length},
          {"k", p.k()},
          {"frequencies", p.frequencies},
          {"periods", p.periods},
          {"amplitudes", p.amplitudes}};
}

std::vector<double> amplitude_spectrum(const Tensor& seasonal) {
  const std::size_t length = seasonal.rows(), channels = seasonal.cols();
  if (length < 4) throw ShapeError("amplitude_spectrum: series needs at least 4 time steps");
  const std::size_t bins = ceil_div(length, 2) + 1;
  std::vector<double> amps(bins, 0.0);
  RealForwardPlan plan(length);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t t = 0; t < length; ++t) plan.input()[t] = seasonal(t, c);
    plan.execute();
    for (std::size_t j = 0; j < bins; ++j) amps[j] += plan.magnitude(j);
  }
  for (double& a : amps) a /= static_cast<double>(channels);
  return amps;
}

PeriodSet select_periods(std::span<const double> amplitudes, std::size_t k, std::size_t length) {
  if (k < 2) throw ConfigError("select_periods: k must be at least 2");
  const std::size_t fmax = ceil_div(length, 2);
  if (amplitudes.size() < fmax + 1) {
    throw ShapeError("select_periods: spectrum has " + std::to_string(amplitudes.size()) +
                     " bins, need " + std::to_string(fmax + 1));
  }
  if (k > fmax) {
    throw ConfigError("select_periods: k=" + std::to_string(k) + " exceeds the " +
                      std::to_string(fmax) + " usable frequencies for L=" +
                      std::to_string(length));
  }
  std::vector<std::size_t> candidates(fmax > 1 ? fmax - 1 : 0);
  std::iota(candidates.begin(), candidates.end(), std::size_t{2});
  std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    return amplitudes[a] > amplitudes[b];
  });

  std::vector<std::size_t> chosen{1};
  std::vector<std::size_t> used_periods{length};
  for (std::size_t f : candidates) {
    if (chosen.size() == k) break;
    const std::size_t p = ceil_div(length, f);
    if (std::find(used_periods.begin(), used_periods.end(), p) != used_periods.end()) continue;
    chosen.push_back(f);
    used_periods.push_back(p);
  }
  if (chosen.size() < k) {
    throw ConfigError("select_periods: only " + std::to_string(chosen.size()) +
                      " distinct periods available for k=" + std::to_string(k));
  }
  std::sort(chosen.begin(), chosen.end());
  PeriodSet out = period_set_from_frequencies(std::move(chosen), length);
  for (std::size_t i = 0; i < out.k(); ++i) out.amplitudes[i] = amplitudes[out.frequencies[i]];
  return out;
}

PeriodSet period_set_from_frequencies(std::vector<std::size_t> frequencies, std::size_t length) {
  PeriodSet out;
  out.length = length;
  out.frequencies = std::move(frequencies);
  for (std::size_t f : out.frequencies) {
    if (f == 0) throw ConfigError("PeriodSet: frequency 0 is not allowed");
    out.periods.push_back(ceil_div(length, f));
  }
  out.amplitudes.assign(out.frequencies.size(), 0.0);
  out.validate();
  return out;
}

PeriodSet detect_periods(const Tensor& seasonal, std::size_t k) {
  return select_periods(amplitude_spectrum(seasonal), k, seasonal.rows());
}

}  // namespace perimid
