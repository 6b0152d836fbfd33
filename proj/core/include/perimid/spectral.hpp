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
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "perimid/tensor.hpp"

namespace perimid {

/// Selected frequencies (cycles per window) with their periods and
/// channel-averaged amplitudes. Frequencies ascend, periods descend and
/// frequencies[0] is always 1, so the top pyramid level is the whole window.
struct PeriodSet {
  std::size_t length = 0;
  std::vector<std::size_t> frequencies;
  std::vector<std::size_t> periods;
  std::vector<double> amplitudes;

  std::size_t k() const { return frequencies.size(); }

  /// Throws ConfigError when any invariant is violated for `length`.
  void validate() const;

  friend bool operator==(const PeriodSet&, const PeriodSet&) = default;
};

nlohmann::json to_json(const PeriodSet& periods);

/// Integer ceil(a / b).
constexpr std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

/// Channel-averaged DFT magnitudes |X_j| for j = 0..ceil(L/2) of an L x C
/// window. Requires L >= 4.
std::vector<double> amplitude_spectrum(const Tensor& seasonal);

/// Forces f = 1 and fills the other k - 1 slots with the largest amplitudes
/// among j in [2, ceil(L/2)]. Ties go to the lower frequency. A candidate
/// whose period ceil(L/j) equals one already chosen is skipped so periods
/// stay strictly descending.
PeriodSet select_periods(std::span<const double> amplitudes, std::size_t k, std::size_t length);

/// Builds the PeriodSet for explicit frequencies (used for frozen pyramids).
PeriodSet period_set_from_frequencies(std::vector<std::size_t> frequencies, std::size_t length);

/// amplitude_spectrum followed by select_periods.
PeriodSet detect_periods(const Tensor& seasonal, std::size_t k);

}  // namespace perimid
