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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "perimid/autodiff.hpp"
#include "perimid/parameters.hpp"
#include "perimid/spectral.hpp"
#include "perimid/tensor.hpp"

namespace perimid {

/// One periodic component: the half-open time range [start, end) at
/// `slot` within pyramid `level`. Levels and slots are 0-based; level 0 is
/// the whole window.
struct ComponentIndex {
  std::size_t level = 0;
  std::size_t slot = 0;
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool overlaps(const ComponentIndex& other) const {
    return start < other.end && other.start < end;
  }

  friend bool operator==(const ComponentIndex&, const ComponentIndex&) = default;
};

/// Component table of a pyramid in canonical (level-major, slot-minor)
/// token order. Level l holds ceil(L / p_l) consecutive chunks of length p_l;
/// only the last chunk of a level may be shorter.
class PyramidLayout {
 public:
  PyramidLayout() = default;
  explicit PyramidLayout(PeriodSet periods);

  const PeriodSet& periods() const { return periods_; }
  std::size_t length() const { return periods_.length; }
  std::size_t levels() const { return periods_.k(); }
  std::size_t token_count() const { return table_.size(); }
  std::size_t level_size(std::size_t level) const;
  /// Token index of the first component of `level`.
  std::size_t level_offset(std::size_t level) const { return offsets_.at(level); }
  std::size_t token(std::size_t level, std::size_t slot) const {
    return offsets_.at(level) + slot;
  }

  std::span<const ComponentIndex> table() const { return table_; }
  std::span<const ComponentIndex> level(std::size_t level) const;
  const ComponentIndex& operator[](std::size_t token) const { return table_.at(token); }

 private:
  PeriodSet periods_;
  std::vector<ComponentIndex> table_;
  std::vector<std::size_t> offsets_;
};

PyramidLayout partition(const PeriodSet& periods);

/// Raw values of every component of one channel, in token order.
std::vector<std::vector<double>> component_values(std::span<const double> series,
                                                  const PyramidLayout& layout);

/// Components zero-padded on the right to length L: an N x L matrix.
Tensor pad_components(std::span<const double> series, const PyramidLayout& layout);

/// Overlap relation between components of consecutive levels.
class InclusionRelation {
 public:
  InclusionRelation() = default;
  explicit InclusionRelation(const PyramidLayout& layout);

  /// True when component `parent_slot` of level `child_level - 1` overlaps
  /// component `child_slot` of `child_level`. child_level >= 1.
  bool related(std::size_t child_level, std::size_t parent_slot, std::size_t child_slot) const;

  /// Token indices of the overlapping components one level up / down.
  const std::vector<std::size_t>& parents(std::size_t token) const { return parents_.at(token); }
  const std::vector<std::size_t>& children(std::size_t token) const {
    return children_.at(token);
  }

 private:
  // blocks_[l - 1] is the n_{l-1} x n_l overlap matrix, row-major.
  std::vector<std::vector<std::uint8_t>> blocks_;
  std::vector<std::size_t> level_sizes_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
};

InclusionRelation inclusion(const PyramidLayout& layout);

inline constexpr double kMaskedLogit = -1e9;

/// Symmetric N x N attention permission matrix.
class AttentionMask {
 public:
  AttentionMask() = default;
  explicit AttentionMask(std::size_t n, bool allowed = false);
  static AttentionMask full(std::size_t n) { return AttentionMask(n, true); }

  std::size_t size() const { return n_; }
  bool operator()(std::size_t i, std::size_t j) const { return allowed_[i * n_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool allowed) { allowed_[i * n_ + j] = allowed; }
  std::size_t allowed_count() const;
  bool all_allowed() const { return allowed_count() == n_ * n_; }

  /// 0 where allowed, kMaskedLogit where not; N x N.
  Tensor additive_bias() const;
  std::string to_csv() const;

  friend bool operator==(const AttentionMask&, const AttentionMask&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> allowed_;
};

/// Token i may attend token j iff both sit on the same level, or they sit on
/// adjacent levels and overlap. Components two or more levels apart never
/// connect directly.
AttentionMask build_mask(const InclusionRelation& relation, const PyramidLayout& layout);

struct PeriodicPyramid {
  PyramidLayout layout;
  InclusionRelation relation;
  AttentionMask mask;
};

PeriodicPyramid build_pyramid(const PeriodSet& periods);

/// Component table, inclusion edges and 0/1 mask.
nlohmann::json to_json(const PeriodicPyramid& pyramid);

/// Worst-case token count for windows of `length` with `k` levels.
std::size_t max_token_count(std::size_t length, std::size_t k);

/// Shared zero-pad-and-project token embedding plus learned per-slot
/// positional embeddings.
class TokenEmbedding {
 public:
  TokenEmbedding() = default;
  TokenEmbedding(ParameterStore& store, std::size_t input_len, std::size_t d_model,
                 std::size_t max_tokens, Rng& rng);

  /// padded: N x L from pad_components. Returns N x d_model tokens.
  Var embed(const Binding& bound, const Tensor& padded) const;

  std::size_t max_tokens() const { return max_tokens_; }
  ParamId projection() const { return projection_; }
  ParamId bias() const { return bias_; }
  ParamId positions() const { return positions_; }

 private:
  ParamId projection_ = 0;
  ParamId bias_ = 0;
  ParamId positions_ = 0;
  std::size_t max_tokens_ = 0;
};

}  // namespace perimid
