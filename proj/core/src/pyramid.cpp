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

#include "perimid/pyramid.hpp"

#include <cmath>

#include "perimid/errors.hpp"

namespace perimid {

PyramidLayout::PyramidLayout(PeriodSet periods) : periods_(std::move(periods)) {
  periods_.validate();
  const std::size_t length = periods_.length;
  for (std::size_t level = 0; level < periods_.k(); ++level) {
    offsets_.push_back(table_.size());
    const std::size_t p = periods_.periods[level];
    const std::size_t count = ceil_div(length, p);
    for (std::size_t slot = 0; slot < count; ++slot) {
      table_.push_back({level, slot, slot * p, std::min((slot + 1) * p, length)});
    }
  }
  offsets_.push_back(table_.size());
}

std::size_t PyramidLayout::level_size(std::size_t level) const {
  return offsets_.at(level + 1) - offsets_.at(level);
}

std::span<const ComponentIndex> PyramidLayout::level(std::size_t level) const {
  return std::span<const ComponentIndex>(table_).subspan(offsets_.at(level), level_size(level));
}

PyramidLayout partition(const PeriodSet& periods) { return PyramidLayout(periods); }

std::vector<std::vector<double>> component_values(std::span<const double> series,
                                                  const PyramidLayout& layout) {
  if (series.size() != layout.length()) {
    throw ShapeError("component_values: series length " + std::to_string(series.size()) +
                     " does not match pyramid length " + std::to_string(layout.length()));
  }
  std::vector<std::vector<double>> out;
  out.reserve(layout.token_count());
  for (const ComponentIndex& c : layout.table()) {
    out.emplace_back(series.begin() + static_cast<std::ptrdiff_t>(c.start),
                     series.begin() + static_cast<std::ptrdiff_t>(c.end));
  }
  return out;
}

Tensor pad_components(std::span<const double> series, const PyramidLayout& layout) {
  if (series.size() != layout.length()) {
    throw ShapeError("pad_components: series length does not match pyramid length");
  }
  const std::size_t length = layout.length();
  Tensor out({layout.token_count(), length});
  for (std::size_t i = 0; i < layout.token_count(); ++i) {
    const ComponentIndex& c = layout[i];
    for (std::size_t t = c.start; t < c.end; ++t) out(i, t - c.start) = series[t];
  }
  return out;
}

InclusionRelation::InclusionRelation(const PyramidLayout& layout)
    : parents_(layout.token_count()), children_(layout.token_count()) {
  for (std::size_t l = 0; l < layout.levels(); ++l) level_sizes_.push_back(layout.level_size(l));
  for (std::size_t l = 1; l < layout.levels(); ++l) {
    const auto upper = layout.level(l - 1);
    const auto lower = layout.level(l);
    std::vector<std::uint8_t> block(upper.size() * lower.size(), 0);
    for (const ComponentIndex& p : upper) {
      for (const ComponentIndex& c : lower) {
        if (!p.overlaps(c)) continue;
        block[p.slot * lower.size() + c.slot] = 1;
        parents_[layout.token(l, c.slot)].push_back(layout.token(l - 1, p.slot));
        children_[layout.token(l - 1, p.slot)].push_back(layout.token(l, c.slot));
      }
    }
    blocks_.push_back(std::move(block));
  }
}

bool InclusionRelation::related(std::size_t child_level, std::size_t parent_slot,
                                std::size_t child_slot) const {
  if (child_level == 0 || child_level >= level_sizes_.size()) {
    throw Error("InclusionRelation: level " + std::to_string(child_level) + " has no parent level");
  }
  const std::size_t width = level_sizes_[child_level];
  if (parent_slot >= level_sizes_[child_level - 1] || child_slot >= width) {
    throw Error("InclusionRelation: slot out of range");
  }
  return blocks_[child_level - 1][parent_slot * width + child_slot] != 0;
}

InclusionRelation inclusion(const PyramidLayout& layout) { return InclusionRelation(layout); }

AttentionMask::AttentionMask(std::size_t n, bool allowed)
    : n_(n), allowed_(n * n, allowed ? 1 : 0) {}

std::size_t AttentionMask::allowed_count() const {
  std::size_t total = 0;
  for (auto v : allowed_) total += v;
  return total;
}

Tensor AttentionMask::additive_bias() const {
  Tensor bias({n_, n_});
  for (std::size_t i = 0; i < allowed_.size(); ++i) bias[i] = allowed_[i] ? 0.0 : kMaskedLogit;
  return bias;
}

std::string AttentionMask::to_csv() const {
  std::string out;
  out.reserve(n_ * n_ * 2);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      if (j) out += ',';
      out += (*this)(i, j) ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

AttentionMask build_mask(const InclusionRelation& relation, const PyramidLayout& layout) {
  const std::size_t n = layout.token_count();
  AttentionMask mask(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t level = layout[i].level;
    const std::size_t first = layout.level_offset(level);
    for (std::size_t j = first; j < first + layout.level_size(level); ++j) mask.set(i, j, true);
    for (std::size_t p : relation.parents(i)) {
      mask.set(i, p, true);
      mask.set(p, i, true);
    }
  }
  return mask;
}

PeriodicPyramid build_pyramid(const PeriodSet& periods) {
  PeriodicPyramid out;
  out.layout = partition(periods);
  out.relation = inclusion(out.layout);
  out.mask = build_mask(out.relation, out.layout);
  return out;
}

nlohmann::json to_json(const PeriodicPyramid& pyramid) {
  const PyramidLayout& layout = pyramid.layout;
  nlohmann::json components = nlohmann::json::array();
  for (std::size_t i = 0; i < layout.token_count(); ++i) {
    const ComponentIndex& c = layout[i];
    components.push_back(
        {{"token", i}, {"level", c.level}, {"slot", c.slot}, {"start", c.start}, {"end", c.end}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t i = 0; i < layout.token_count(); ++i) {
    for (std::size_t p : pyramid.relation.parents(i)) edges.push_back({{"parent", p}, {"child", i}});
  }
  nlohmann::json mask = nlohmann::json::array();
  for (std::size_t i = 0; i < pyramid.mask.size(); ++i) {
    std::vector<int> row(pyramid.mask.size());
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = pyramid.mask(i, j) ? 1 : 0;
    mask.push_back(row);
  }
  return {{"periods", to_json(layout.periods())},
          {"token_count", layout.token_count()},
          {"components", components},
          {"inclusion", edges},
          {"mask", mask}};
}

std::size_t max_token_count(std::size_t length, std::size_t k) {
  // Periods below the root are distinct integers >= 2, so the densest
  // possible pyramid uses periods 2, 3, ..., k.
  std::size_t total = 1;
  for (std::size_t p = 2; p <= k; ++p) total += ceil_div(length, p);
  return total;
}

TokenEmbedding::TokenEmbedding(ParameterStore& store, std::size_t input_len, std::size_t d_model,
                               std::size_t max_tokens, Rng& rng)
    : max_tokens_(max_tokens) {
  if (d_model == 0) throw ConfigError("TokenEmbedding: d_model must be at least 1");
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_len));
  projection_ = store.add("embed.projection", uniform_init({input_len, d_model}, bound, rng));
  bias_ = store.add("embed.bias", uniform_init({1, d_model}, bound, rng));
  positions_ = store.add("embed.positions", normal_init({max_tokens, d_model}, 0.02, rng));
}

Var TokenEmbedding::embed(const Binding& bound, const Tensor& padded) const {
  const std::size_t n = padded.rows();
  if (n > max_tokens_) {
    throw ConfigError("TokenEmbedding: pyramid has " + std::to_string(n) +
                      " tokens, embedding supports " + std::to_string(max_tokens_));
  }
  Tape& tape = bound.tape();
  Var projected = add_row(matmul(tape.constant(padded), bound[projection_]), bound[bias_]);
  return add(projected, slice_rows(bound[positions_], 0, n));
}

}  // namespace perimid
