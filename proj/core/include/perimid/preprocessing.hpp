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
#include <vector>

#include "perimid/tensor.hpp"

namespace perimid {

// A series window is an L x C tensor: rows are time steps, columns channels.

inline constexpr double kSigmaFloor = 1e-5;
inline constexpr std::size_t kDefaultMovingAverageKernel = 25;

struct NormStats {
  std::vector<double> mu;
  std::vector<double> sigma;  // each >= kSigmaFloor
};

struct NormalizedSeries {
  Tensor values;
  NormStats stats;
};

/// Per-channel instance normalization with the population variance.
/// Requires L >= 2.
NormalizedSeries normalize(const Tensor& x);

/// Elementwise sigma * y + mu per channel.
Tensor denormalize(const Tensor& y, const NormStats& stats);

struct DecompositionResult {
  Tensor seasonal;
  Tensor trend;
};

/// Centered moving average with replicate edge padding; seasonal = x - trend.
/// kernel must be odd and at most 2L - 1.
DecompositionResult decompose(const Tensor& x, std::size_t kernel = kDefaultMovingAverageKernel);

/// L x C grid of flags, true where a value is missing.
class MissingMask {
 public:
  MissingMask() = default;
  MissingMask(std::size_t length, std::size_t channels, bool missing = false);

  std::size_t length() const { return length_; }
  std::size_t channels() const { return channels_; }
  bool operator()(std::size_t t, std::size_t c) const { return flags_[t * channels_ + c] != 0; }
  void set(std::size_t t, std::size_t c, bool missing) { flags_[t * channels_ + c] = missing; }
  std::size_t missing_count() const;
  std::size_t missing_count(std::size_t channel) const;

  /// 1.0 where missing, 0.0 where observed; shape L x C.
  Tensor as_weights() const;

  friend bool operator==(const MissingMask&, const MissingMask&) = default;

 private:
  std::size_t length_ = 0;
  std::size_t channels_ = 0;
  std::vector<std::uint8_t> flags_;
};

/// Fills every missing point from its nearest observed neighbors: the mean
/// of both sides when both exist, otherwise the single available side.
/// Interpolated values never feed later gaps, so the result does not depend
/// on scan order. Observed entries are returned untouched.
Tensor pre_interpolate(const Tensor& x, const MissingMask& mask);

}  // namespace perimid
