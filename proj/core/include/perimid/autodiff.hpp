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
#include <functional>
#include <span>
#include <vector>

#include "perimid/tensor.hpp"

namespace perimid {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while
/// the owning tape is alive.
class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Tensor& grad() const;
  bool requires_grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Ordered record of differentiable operations.
///
/// Every op appends a node holding its value and a closure that pushes the
/// node's gradient into its inputs. `backward` replays the closures in
/// reverse order. A tape is single-owner: never run two backward passes on
/// one tape concurrently.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Records a leaf. Gradients are only accumulated for leaves that
  /// require them and for nodes that depend on such leaves.
  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Internal: appends an op node. `inputs` decide whether the node needs a
  /// gradient. The value is checked for NaN/Inf.
  Var record(Tensor value, std::span<const Var> inputs, Backward backward, const char* op);

  /// Seeds d(root)/d(root) = 1 and propagates to every reachable node.
  /// The root must be a 1x1 scalar.
  void backward(const Var& root);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const;
  /// Mutable gradient buffer, zero-initialized on first use.
  Tensor& grad_buffer(std::size_t id);
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  std::size_t size() const { return nodes_.size(); }
  void zero_grad();

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
  };

  std::vector<Node> nodes_;
};

// Differentiable ops. All operands are matrices (vectors are 1 x n) and must
// live on the same tape.

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
/// a + bias broadcast over rows; bias is 1 x cols.
Var add_row(const Var& a, const Var& bias);
/// a + offset where offset is a non-differentiable constant (e.g. a mask).
Var add_const(const Var& a, const Tensor& offset);
/// a * factor elementwise, factor constant (e.g. a dropout mask).
Var mul_const(const Var& a, const Tensor& factor);
Var softmax_rows(const Var& a);
Var gelu(const Var& a);
/// Per-row normalization to zero mean and unit variance followed by an
/// elementwise gain and bias (both 1 x cols).
Var layer_norm_rows(const Var& a, const Var& gain, const Var& bias, double eps = 1e-5);
Var slice_rows(const Var& a, std::size_t start, std::size_t count);
Var slice_cols(const Var& a, std::size_t start, std::size_t count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
/// Output row r is the concatenation of rows index[r][0], index[r][1], ... of a.
/// All index rows must have the same length.
Var gather_concat_rows(const Var& a, const std::vector<std::vector<std::size_t>>& index);
/// Mean over rows, 1 x cols.
Var mean_rows(const Var& a);
Var sum_all(const Var& a);
Var mean_all(const Var& a);

// Losses, each returning a 1x1 scalar.

/// Mean squared error. With a non-empty `weight` (same shape, entries >= 0)
/// the result is sum(w * err^2) / sum(w).
Var mse_loss(const Var& pred, const Tensor& target, const Tensor& weight = {});
/// Symmetric MAPE on 0..200 scale; terms with |target|+|pred| < 1e-12 count
/// as zero and pass no gradient.
Var smape_loss(const Var& pred, const Tensor& target);
/// Softmax cross-entropy of a 1 x K logit row against a class index.
Var cross_entropy_loss(const Var& logits, std::size_t label);

}  // namespace perimid
