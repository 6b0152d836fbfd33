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

#include "perimid/preprocessing.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "perimid/errors.hpp"

namespace perimid {

NormalizedSeries normalize(const Tensor& x) {
  const std::size_t length = x.rows(), channels = x.cols();
  if (length < 2) throw ShapeError("normalize: series needs at least 2 time steps");
  NormalizedSeries out{Tensor({length, channels}), {}};
  out.stats.mu.assign(channels, 0.0);
  out.stats.sigma.assign(channels, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    double mean = 0.0;
    for (std::size_t t = 0; t < length; ++t) mean += x(t, c);
    mean /= static_cast<double>(length);
    double var = 0.0;
    for (std::size_t t = 0; t < length; ++t) var += (x(t, c) - mean) * (x(t, c) - mean);
    var /= static_cast<double>(length);
    const double sigma = std::max(std::sqrt(var), kSigmaFloor);
    out.stats.mu[c] = mean;
    out.stats.sigma[c] = sigma;
    for (std::size_t t = 0; t < length; ++t) out.values(t, c) = (x(t, c) - mean) / sigma;
  }
  return out;
}

Tensor denormalize(const Tensor& y, const NormStats& stats) {
  const std::size_t channels = y.cols();
  if (stats.mu.size() != channels || stats.sigma.size() != channels) {
    throw ShapeError("denormalize: series has " + std::to_string(channels) +
                     " channels, stats have " + std::to_string(stats.mu.size()));
  }
  Tensor out = y;
  for (std::size_t t = 0; t < y.rows(); ++t)
    for (std::size_t c = 0; c < channels; ++c)
      out(t, c) = stats.sigma[c] * y(t, c) + stats.mu[c];
  return out;
}

DecompositionResult decompose(const Tensor& x, std::size_t kernel) {
  const std::size_t length = x.rows(), channels = x.cols();
  if (kernel == 0 || kernel % 2 == 0) {
    throw ConfigError("decompose: moving-average kernel must be odd, got " +
                      std::to_string(kernel));
  }
  if (kernel > 2 * length - 1) {
    throw ConfigError("decompose: kernel " + std::to_string(kernel) + " exceeds 2L-1 for L=" +
                      std::to_string(length));
  }
  const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
  const auto last = static_cast<std::ptrdiff_t>(length) - 1;
  DecompositionResult out{Tensor({length, channels}), Tensor({length, channels})};
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::ptrdiff_t t = 0; t <= last; ++t) {
      double total = 0.0;
      for (std::ptrdiff_t j = t - half; j <= t + half; ++j) {
        total += x(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, last)), c);
      }
      const auto row = static_cast<std::size_t>(t);
      out.trend(row, c) = total / static_cast<double>(kernel);
      out.seasonal(row, c) = x(row, c) - out.trend(row, c);
    }
  }
  return out;
}

MissingMask::MissingMask(std::size_t length, std::size_t channels, bool missing)
    : length_(length), channels_(channels), flags_(length * channels, missing ? 1 : 0) {}

std::size_t MissingMask::missing_count() const {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), 1));
}

std::size_t MissingMask::missing_count(std::size_t channel) const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < length_; ++t) n += (*this)(t, channel);
  return n;
}

Tensor MissingMask::as_weights() const {
  Tensor w({length_, channels_});
  for (std::size_t i = 0; i < flags_.size(); ++i) w[i] = flags_[i] ? 1.0 : 0.0;
  return w;
}

Tensor pre_interpolate(const Tensor& x, const MissingMask& mask) {
  const std::size_t length = x.rows(), channels = x.cols();
  if (mask.length() != length || mask.channels() != channels) {
    throw ShapeError("pre_interpolate: mask shape does not match the series");
  }
  Tensor out = x;
  for (std::size_t c = 0; c < channels; ++c) {
    if (mask.missing_count(c) == length) {
      throw DataError("pre_interpolate: channel " + std::to_string(c) + " has no observed points");
    }
    // Nearest observed value at or before each t, from a forward scan.
    std::vector<std::optional<double>> before(length), after(length);
    std::optional<double> last;
    for (std::size_t t = 0; t < length; ++t) {
      before[t] = last;
      if (!mask(t, c)) last = x(t, c);
    }
    last.reset();
    for (std::size_t t = length; t-- > 0;) {
      after[t] = last;
      if (!mask(t, c)) last = x(t, c);
    }
    for (std::size_t t = 0; t < length; ++t) {
      if (!mask(t, c)) continue;
      if (before[t] && after[t]) {
        out(t, c) = 0.5 * (*before[t] + *after[t]);
      } else {
        out(t, c) = before[t] ? *before[t] : *after[t];
      }
    }
  }
  return out;
}

}  // namespace perimid
