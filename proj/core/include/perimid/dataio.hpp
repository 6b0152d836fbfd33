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
#include <optional>
#include <string>
#include <vector>

#include "perimid/preprocessing.hpp"
#include "perimid/tensor.hpp"

namespace perimid {

struct CsvTable {
  std::vector<std::string> columns;  // empty without a header
  Tensor values;                     // rows x channels
};

/// Reads a rectangular numeric CSV. The named time column (header required)
/// is dropped. Errors name the 1-based data row and file column.
CsvTable load_csv(const std::filesystem::path& path, bool has_header = true,
                  const std::optional<std::string>& time_column = std::nullopt);
CsvTable parse_csv(const std::string& text, bool has_header = true,
                   const std::optional<std::string>& time_column = std::nullopt);

/// amplitude * sin(2 pi frequency t / reference_length + phase).
struct Tone {
  double frequency = 1.0;
  double amplitude = 1.0;
  double phase = 0.0;
};

struct MultiperiodSpec {
  std::size_t length = 512;
  std::size_t channels = 1;
  std::vector<Tone> tones;
  double trend_slope = 0.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  /// Samples per `frequency` cycles; 0 means `length`.
  std::size_t reference_length = 0;
  /// Channel c shifts every tone's phase by c * channel_phase_step.
  double channel_phase_step = 0.3;

  std::size_t reference() const { return reference_length ? reference_length : length; }
};

struct GeneratedSeries {
  Tensor values;  // length x channels
  MultiperiodSpec spec;

  /// Period in samples of every tone, in spec order.
  std::vector<double> tone_periods() const;
  /// Integer frequency (cycles per window) of every tone seen through a
  /// window of `window_len` samples.
  std::vector<double> window_frequencies(std::size_t window_len) const;
};

/// Sum of tones + trend_slope * t + N(0, noise_sigma) per channel.
GeneratedSeries gen_multiperiod(const MultiperiodSpec& spec);

struct Window {
  Tensor input;   // L x C
  Tensor target;  // T x C (empty when T = 0)
  std::size_t start = 0;
};

/// Windows at start = 0, stride, 2*stride, ... while start + L + T <= length.
std::vector<Window> window(const Tensor& series, std::size_t input_len, std::size_t target_len,
                           std::size_t stride);

struct SplitFractions {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

/// Contiguous train | val | test partition of a series.
struct DatasetSplits {
  Tensor train;
  Tensor val;
  Tensor test;
  std::size_t val_begin = 0;
  std::size_t test_begin = 0;
};

DatasetSplits split_series(const Tensor& series, const SplitFractions& fractions);

/// Exactly round(ratio * L) missing points per channel, chosen uniformly.
MissingMask gen_mask(std::size_t length, std::size_t channels, double ratio, std::uint64_t seed);

/// Series rows [begin, end).
Tensor slice_time(const Tensor& series, std::size_t begin, std::size_t end);

/// Where windows come from and how they are cut.
struct DatasetManifest {
  std::string name = "default";
  std::string csv_path;  // empty: use the generator
  bool has_header = true;
  std::string time_column;
  MultiperiodSpec generator;
  std::size_t input_len = 64;
  std::size_t target_len = 16;
  std::size_t stride = 1;
  SplitFractions split;
  std::uint64_t seed = 0;

  /// Loads or generates the raw series.
  Tensor load() const;
  void validate() const;
};

/// Parses "freq:amp[:phase],..." into tones.
std::vector<Tone> parse_tones(const std::string& text);

/// Reads an INI file with one [section] per dataset.
std::vector<DatasetManifest> load_manifests(const std::filesystem::path& path);

/// Writes a CSV with a header row followed by numeric rows.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace perimid
