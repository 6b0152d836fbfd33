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

#include "perimid/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "perimid/errors.hpp"
#include "perimid/parameters.hpp"

namespace perimid {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

CsvTable parse_csv(const std::string& text, bool has_header,
                   const std::optional<std::string>& time_column) {
  std::vector<std::string_view> lines;
  std::string_view rest(text);
  while (!rest.empty()) {
    const std::size_t nl = rest.find('\n');
    const std::string_view line = rest.substr(0, nl);
    if (!trim(line).empty()) lines.push_back(line);
    if (nl == std::string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  if (lines.empty()) throw DataError("csv: no rows");

  CsvTable table;
  std::size_t first_data = 0;
  std::optional<std::size_t> skip;
  std::size_t width = 0;
  if (has_header) {
    for (std::string_view name : split_fields(lines[0])) table.columns.emplace_back(name);
    width = table.columns.size();
    first_data = 1;
    if (time_column) {
      const auto it = std::find(table.columns.begin(), table.columns.end(), *time_column);
      if (it == table.columns.end()) {
        throw DataError("csv: time column '" + *time_column + "' not found in header");
      }
      skip = static_cast<std::size_t>(it - table.columns.begin());
      table.columns.erase(it);
    }
  } else {
    if (time_column) throw DataError("csv: a time column needs a header row");
    width = split_fields(lines[0]).size();
  }
  const std::size_t rows = lines.size() - first_data;
  const std::size_t channels = width - (skip ? 1 : 0);
  if (rows == 0) throw DataError("csv: header but no data rows");
  if (channels == 0) throw DataError("csv: no value columns");

  std::vector<double> values;
  values.reserve(rows * channels);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto fields = split_fields(lines[first_data + r]);
    if (fields.size() != width) {
      throw DataError("csv: row " + std::to_string(r + 1) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(width));
    }
    for (std::size_t c = 0; c < width; ++c) {
      if (skip && c == *skip) continue;
      double v = 0.0;
      if (!parse_double(fields[c], v)) {
        throw DataError("csv: non-numeric value '" + std::string(fields[c]) + "' at row " +
                        std::to_string(r + 1) + " col " + std::to_string(c + 1));
      }
      values.push_back(v);
    }
  }
  table.values = Tensor({rows, channels}, std::move(values));
  return table;
}

CsvTable load_csv(const std::filesystem::path& path, bool has_header,
                  const std::optional<std::string>& time_column) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), has_header, time_column);
}

std::vector<double> GeneratedSeries::tone_periods() const {
  std::vector<double> out;
  for (const Tone& t : spec.tones) out.push_back(static_cast<double>(spec.reference()) / t.frequency);
  return out;
}

std::vector<double> GeneratedSeries::window_frequencies(std::size_t window_len) const {
  std::vector<double> out;
  for (const Tone& t : spec.tones) {
    out.push_back(t.frequency * static_cast<double>(window_len) /
                  static_cast<double>(spec.reference()));
  }
  return out;
}

GeneratedSeries gen_multiperiod(const MultiperiodSpec& spec) {
  if (spec.length == 0 || spec.channels == 0) throw ConfigError("gen_multiperiod: empty shape");
  for (std::size_t i = 0; i < spec.tones.size(); ++i) {
    for (std::size_t j = i + 1; j < spec.tones.size(); ++j) {
      if (spec.tones[i].frequency == spec.tones[j].frequency) {
        throw ConfigError("gen_multiperiod: tone frequencies must be distinct");
      }
    }
  }
  GeneratedSeries out{Tensor({spec.length, spec.channels}), spec};
  Rng rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double ref = static_cast<double>(spec.reference());
  for (std::size_t t = 0; t < spec.length; ++t) {
    for (std::size_t c = 0; c < spec.channels; ++c) {
      double v = spec.trend_slope * static_cast<double>(t);
      for (const Tone& tone : spec.tones) {
        const double phase = tone.phase + static_cast<double>(c) * spec.channel_phase_step;
        v += tone.amplitude *
             std::sin(2.0 * std::numbers::pi * tone.frequency * static_cast<double>(t) / ref + phase);
      }
      if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise(rng);
      out.values(t, c) = v;
    }
  }
  return out;
}

Tensor slice_time(const Tensor& series, std::size_t begin, std::size_t end) {
  if (begin >= end || end > series.rows()) {
    throw ShapeError("slice_time: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") outside " + std::to_string(series.rows()) + " rows");
  }
  const std::size_t c = series.cols();
  const auto src = series.data().subspan(begin * c, (end - begin) * c);
  return Tensor({end - begin, c}, std::vector<double>(src.begin(), src.end()));
}

std::vector<Window> window(const Tensor& series, std::size_t input_len, std::size_t target_len,
                           std::size_t stride) {
  if (input_len == 0 || stride == 0) throw ConfigError("window: input_len and stride must be >= 1");
  const std::size_t length = series.rows();
  if (input_len + target_len > length) {
    throw DataError("window: series of length " + std::to_string(length) +
                    " is too short for L+T=" + std::to_string(input_len + target_len));
  }
  std::vector<Window> out;
  for (std::size_t s = 0; s + input_len + target_len <= length; s += stride) {
    Window w;
    w.start = s;
    w.input = slice_time(series, s, s + input_len);
    if (target_len) w.target = slice_time(series, s + input_len, s + input_len + target_len);
    out.push_back(std::move(w));
  }
  return out;
}

DatasetSplits split_series(const Tensor& series, const SplitFractions& f) {
  if (f.train <= 0.0 || f.val < 0.0 || f.test <= 0.0 ||
      std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw ConfigError("split: fractions must be positive and sum to 1");
  }
  const std::size_t n = series.rows();
  const auto train_end = static_cast<std::size_t>(std::floor(f.train * static_cast<double>(n)));
  const auto val_end =
      static_cast<std::size_t>(std::floor((f.train + f.val) * static_cast<double>(n)));
  if (train_end == 0 || val_end >= n) throw DataError("split: series too short to split");
  DatasetSplits out;
  out.train = slice_time(series, 0, train_end);
  if (val_end > train_end) out.val = slice_time(series, train_end, val_end);
  out.test = slice_time(series, val_end, n);
  out.val_begin = train_end;
  out.test_begin = val_end;
  return out;
}

MissingMask gen_mask(std::size_t length, std::size_t channels, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("gen_mask: ratio must lie in (0, 1)");
  const auto count = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(length)));
  if (count >= length) {
    throw ConfigError("gen_mask: ratio " + std::to_string(ratio) + " masks all " +
                      std::to_string(length) + " points");
  }
  MissingMask mask(length, channels);
  Rng rng(seed);
  std::vector<std::size_t> idx(length);
  for (std::size_t c = 0; c < channels; ++c) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, length - 1);
      std::swap(idx[i], idx[pick(rng)]);
      mask.set(idx[i], c, true);
    }
  }
  return mask;
}

std::vector<Tone> parse_tones(const std::string& text) {
  std::vector<Tone> tones;
  std::stringstream items(text);
  std::string item;
  while (std::getline(items, item, ',')) {
    if (trim(item).empty()) continue;
    std::vector<double> parts;
    std::stringstream fields{std::string(trim(item))};
    std::string field;
    while (std::getline(fields, field, ':')) {
      double v = 0.0;
      if (!parse_double(trim(field), v)) throw ConfigError("tones: cannot parse '" + item + "'");
      parts.push_back(v);
    }
    if (parts.size() < 2 || parts.size() > 3) {
      throw ConfigError("tones: expected freq:amp[:phase], got '" + item + "'");
    }
    tones.push_back({parts[0], parts[1], parts.size() == 3 ? parts[2] : 0.0});
  }
  return tones;
}

void DatasetManifest::validate() const {
  if (input_len < 4) throw ConfigError("manifest '" + name + "': input_len must be >= 4");
  if (stride == 0) throw ConfigError("manifest '" + name + "': stride must be >= 1");
  if (csv_path.empty() && generator.tones.empty() && generator.trend_slope == 0.0 &&
      generator.noise_sigma == 0.0) {
    throw ConfigError("manifest '" + name + "': neither a csv path nor a generator signal");
  }
}

Tensor DatasetManifest::load() const {
  validate();
  if (!csv_path.empty()) {
    const std::optional<std::string> time =
        time_column.empty() ? std::nullopt : std::optional<std::string>(time_column);
    return load_csv(csv_path, has_header, time).values;
  }
  return gen_multiperiod(generator).values;
}

std::vector<DatasetManifest> load_manifests(const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  std::vector<DatasetManifest> out;
  for (const auto& [section, keys] : tree) {
    DatasetManifest m;
    m.name = section;
    try {
      for (const auto& [key, node] : keys) {
        const std::string v = node.get_value<std::string>();
        if (key == "csv") m.csv_path = v;
        else if (key == "has_header") m.has_header = node.get_value<bool>();
        else if (key == "time_column") m.time_column = v;
        else if (key == "input_len") m.input_len = node.get_value<std::size_t>();
        else if (key == "target_len") m.target_len = node.get_value<std::size_t>();
        else if (key == "stride") m.stride = node.get_value<std::size_t>();
        else if (key == "train") m.split.train = node.get_value<double>();
        else if (key == "val") m.split.val = node.get_value<double>();
        else if (key == "test") m.split.test = node.get_value<double>();
        else if (key == "seed") m.seed = m.generator.seed = node.get_value<std::uint64_t>();
        else if (key == "length") m.generator.length = node.get_value<std::size_t>();
        else if (key == "channels") m.generator.channels = node.get_value<std::size_t>();
        else if (key == "tones") m.generator.tones = parse_tones(v);
        else if (key == "trend_slope") m.generator.trend_slope = node.get_value<double>();
        else if (key == "noise_sigma") m.generator.noise_sigma = node.get_value<double>();
        else if (key == "reference_length") m.generator.reference_length = node.get_value<std::size_t>();
        else throw ConfigError("manifest [" + section + "]: unknown key '" + key + "'");
      }
    } catch (const pt::ptree_bad_data& e) {
      throw ConfigError("manifest [" + section + "]: " + e.what());
    }
    out.push_back(std::move(m));
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

}  // namespace perimid
