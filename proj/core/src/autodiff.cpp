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

#include "perimid/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "perimid/errors.hpp"

namespace perimid {

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  require_finite(value, "leaf");
  nodes_.push_back(Node{std::move(value), {}, requires_grad, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> inputs, Backward backward, const char* op) {
  require_finite(value, op);
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw Error(std::string(op) + ": operands live on different tapes");
    needs = needs || nodes_[in.id_].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : Backward{}});
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::grad(std::size_t id) const {
  static const Tensor kEmpty;
  return nodes_[id].grad.empty() ? kEmpty : nodes_[id].grad;
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad = Tensor();
}

void Tape::backward(const Var& root) {
  if (root.tape_ != this) throw Error("backward: root belongs to another tape");
  if (nodes_[root.id_].value.size() != 1) {
    throw ShapeError("backward: root must be a scalar, got shape " +
                     to_string(nodes_[root.id_].value.shape()));
  }
  grad_buffer(root.id_)[0] += 1.0;
  for (std::size_t i = root.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, i);
  }
}

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.value().shape() != b.value().shape()) {
    throw ShapeError(std::string(op) + ": shapes " + to_string(a.value().shape()) + " and " +
                     to_string(b.value().shape()) + " differ");
  }
}

void require_matrix(const Var& a, const char* op) {
  if (a.value().rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + to_string(a.value().shape()));
  }
}

// Accumulates `delta` into the gradient of `v` when v participates.
void accumulate(Tape& tape, const Var& v, const Tensor& delta) {
  if (!tape.requires_grad(v.id())) return;
  Tensor& g = tape.grad_buffer(v.id());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

Var scalar_result(double value, std::span<const Var> inputs, Tape::Backward bw, const char* op) {
  return inputs[0].tape().record(Tensor::scalar(value), inputs, std::move(bw), op);
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tensor out = matmul(a.value(), b.value());
  const Var in[] = {a, b};
  return a.tape().record(std::move(out), in, [a, b](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a.id())) accumulate(t, a, matmul(g, transpose(b.value())));
    if (t.requires_grad(b.id())) accumulate(t, b, matmul(transpose(a.value()), g));
  }, "matmul");
}

Var transpose(const Var& a) {
  const Var in[] = {a};
  return a.tape().record(transpose(a.value()), in, [a](Tape& t, std::size_t self) {
    accumulate(t, a, transpose(t.grad(self)));
  }, "transpose");
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  const Var in[] = {a, b};
  return a.tape().record(std::move(out), in, [a, b](Tape& t, std::size_t self) {
    accumulate(t, a, t.grad(self));
    accumulate(t, b, t.grad(self));
  }, "add");
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const Var in[] = {a, b};
  return a.tape().record(std::move(out), in, [a, b](Tape& t, std::size_t self) {
    accumulate(t, a, t.grad(self));
    if (t.requires_grad(b.id())) {
      Tensor neg = t.grad(self);
      for (double& v : neg.data()) v = -v;
      accumulate(t, b, neg);
    }
  }, "sub");
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const Var in[] = {a, b};
  return a.tape().record(std::move(out), in, [a, b](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a.id())) {
      Tensor da = g;
      for (std::size_t i = 0; i < da.size(); ++i) da[i] *= b.value()[i];
      accumulate(t, a, da);
    }
    if (t.requires_grad(b.id())) {
      Tensor db = g;
      for (std::size_t i = 0; i < db.size(); ++i) db[i] *= a.value()[i];
      accumulate(t, b, db);
    }
  }, "mul");
}

Var scale(const Var& a, double factor) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= factor;
  const Var in[] = {a};
  return a.tape().record(std::move(out), in, [a, factor](Tape& t, std::size_t self) {
    Tensor d = t.grad(self);
    for (double& v : d.data()) v *= factor;
    accumulate(t, a, d);
  }, "scale");
}

Var add_row(const Var& a, const Var& bias) {
  require_matrix(a, "add_row");
  if (bias.value().rank() != 2 || bias.rows() != 1 || bias.cols() != a.cols()) {
    throw ShapeError("add_row: bias " + to_string(bias.value().shape()) + " vs input " +
                     to_string(a.value().shape()));
  }
  Tensor out = a.value();
  const std::size_t n = out.rows(), m = out.cols();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out(i, j) += bias.value()[j];
  const Var in[] = {a, bias};
  return a.tape().record(std::move(out), in, [a, bias](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    accumulate(t, a, g);
    if (t.requires_grad(bias.id())) {
      Tensor& gb = t.grad_buffer(bias.id());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gb[j] += g(i, j);
    }
  }, "add_row");
}

Var add_const(const Var& a, const Tensor& offset) {
  if (a.value().shape() != offset.shape()) {
    throw ShapeError("add_const: " + to_string(a.value().shape()) + " vs " +
                     to_string(offset.shape()));
  }
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += offset[i];
  const Var in[] = {a};
  return a.tape().record(std::move(out), in, [a](Tape& t, std::size_t self) {
    accumulate(t, a, t.grad(self));
  }, "add_const");
}

Var mul_const(const Var& a, const Tensor& factor) {
  if (a.value().shape() != factor.shape()) {
    throw ShapeError("mul_const: " + to_string(a.value().shape()) + " vs " +
                     to_string(factor.shape()));
  }
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor[i];
  const Var in[] = {a};
  return a.tape().record(std::move(out), in, [a, factor](Tape& t, std::size_t self) {
    Tensor d = t.grad(self);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= factor[i];
    accumulate(t, a, d);
  }, "mul_const");
}

Var softmax_rows(const Var& a) {
  require_matrix(a, "softmax_rows");
  Tensor out = softmax_lastdim(a.value());
  const Var in[] = {a};
  return a.tape().record(std::move(out), in, [a](Tape& t, std::size_t self) {
    const Tensor& y = t.value(self);
    const Tensor& g = t.grad(self);
    Tensor d(y.shape());
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) d(i, j) = y(i, j) * (g(i, j) - dot);
    }
    accumulate(t, a, d);
  }, "softmax_rows");
}

Var gelu(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2));
  const Var in[] = {a};
  return a.tape().record(std::move(out), in, [a](Tape& t, std::size_t self) {
    const Tensor& x = a.value();
    Tensor d = t.grad(self);
    const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double v = x[i];
      const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      d[i] *= cdf + v * pdf;
    }
    accumulate(t, a, d);
  }, "gelu");
}

Var layer_norm_rows(const Var& a, const Var& gain, const Var& bias, double eps) {
  require_matrix(a, "layer_norm_rows");
  const std::size_t n = a.rows(), m = a.cols();
  if (gain.value().size() != m || bias.value().size() != m) {
    throw ShapeError("layer_norm_rows: gain/bias width must be " + std::to_string(m));
  }
  Tensor normed({n, m});
  std::vector<double> inv_std(n);
  const Tensor& x = a.value();
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < m; ++j) mean += x(i, j);
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t j = 0; j < m; ++j) var += (x(i, j) - mean) * (x(i, j) - mean);
    var /= static_cast<double>(m);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < m; ++j) normed(i, j) = (x(i, j) - mean) * inv_std[i];
  }
  Tensor out = normed;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      out(i, j) = out(i, j) * gain.value()[j] + bias.value()[j];
  const Var in[] = {a, gain, bias};
  return a.tape().record(std::move(out), in,
      [a, gain, bias, normed = std::move(normed), inv_std = std::move(inv_std)](
          Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const std::size_t rows = g.rows(), width = g.cols();
        if (t.requires_grad(gain.id())) {
          Tensor& gg = t.grad_buffer(gain.id());
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < width; ++j) gg[j] += g(i, j) * normed(i, j);
        }
        if (t.requires_grad(bias.id())) {
          Tensor& gb = t.grad_buffer(bias.id());
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < width; ++j) gb[j] += g(i, j);
        }
        if (t.requires_grad(a.id())) {
          Tensor& ga = t.grad_buffer(a.id());
          const double w = static_cast<double>(width);
          for (std::size_t i = 0; i < rows; ++i) {
            double mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t j = 0; j < width; ++j) {
              const double d = g(i, j) * gain.value()[j];
              mean_d += d;
              mean_dx += d * normed(i, j);
            }
            mean_d /= w;
            mean_dx /= w;
            for (std::size_t j = 0; j < width; ++j) {
              const double d = g(i, j) * gain.value()[j];
              ga(i, j) += inv_std[i] * (d - mean_d - normed(i, j) * mean_dx);
            }
          }
        }
      },
      "layer_norm_rows");
}

Var slice_rows(const Var& a, std::size_t start, std::size_t count) {
  require_matrix(a, "slice_rows");
  if (count == 0 || start + count > a.rows()) {
    throw ShapeError("slice_rows: range [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside " + std::to_string(a.rows()));
  }
  const std::size_t m = a.cols();
  const auto src = a.value().data().subspan(start * m, count * m);
  Tensor out({count, m}, std::vector<double>(src.begin(), src.end()));
  const Var in[] = {a};
  return a.tape().record(std::move(out), in, [a, start, m](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad_buffer(a.id());
    for (std::size_t i = 0; i < g.size(); ++i) ga[start * m + i] += g[i];
  }, "slice_rows");
}

Var slice_cols(const Var& a, std::size_t start, std::size_t count) {
  require_matrix(a, "slice_cols");
  if (count == 0 || start + count > a.cols()) {
    throw ShapeError("slice_cols: range [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside " + std::to_string(a.cols()));
  }
  const std::size_t n = a.rows();
  Tensor out({n, count});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = a.value()(i, start + j);
  const Var in[] = {a};
  return a.tape().record(std::move(out), in, [a, start](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad_buffer(a.id());
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) ga(i, start + j) += g(i, j);
  }, "slice_cols");
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  const std::size_t m = parts[0].cols();
  std::vector<double> data;
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.value().rank() != 2 || p.cols() != m) throw ShapeError("concat_rows: column mismatch");
    data.insert(data.end(), p.value().data().begin(), p.value().data().end());
    rows += p.rows();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return parts[0].tape().record(Tensor({rows, m}, std::move(data)), parts,
      [saved](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        std::size_t offset = 0;
        for (const Var& p : saved) {
          const std::size_t len = p.value().size();
          if (t.requires_grad(p.id())) {
            Tensor& gp = t.grad_buffer(p.id());
            for (std::size_t i = 0; i < len; ++i) gp[i] += g[offset + i];
          }
          offset += len;
        }
      },
      "concat_rows");
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t n = parts[0].rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.value().rank() != 2 || p.rows() != n) throw ShapeError("concat_cols: row mismatch");
    cols += p.cols();
  }
  Tensor out({n, cols});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) out(i, offset + j) = p.value()(i, j);
    offset += p.cols();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return parts[0].tape().record(std::move(out), parts, [saved](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    std::size_t off = 0;
    for (const Var& p : saved) {
      if (t.requires_grad(p.id())) {
        Tensor& gp = t.grad_buffer(p.id());
        for (std::size_t i = 0; i < gp.rows(); ++i)
          for (std::size_t j = 0; j < gp.cols(); ++j) gp(i, j) += g(i, off + j);
      }
      off += p.cols();
    }
  }, "concat_cols");
}

Var gather_concat_rows(const Var& a, const std::vector<std::vector<std::size_t>>& index) {
  require_matrix(a, "gather_concat_rows");
  if (index.empty() || index[0].empty()) throw ShapeError("gather_concat_rows: empty index");
  const std::size_t per = index[0].size(), m = a.cols();
  for (const auto& row : index) {
    if (row.size() != per) throw ShapeError("gather_concat_rows: ragged index");
    for (std::size_t r : row) {
      if (r >= a.rows()) throw ShapeError("gather_concat_rows: row index out of range");
    }
  }
  Tensor out({index.size(), per * m});
  for (std::size_t r = 0; r < index.size(); ++r)
    for (std::size_t s = 0; s < per; ++s)
      for (std::size_t j = 0; j < m; ++j) out(r, s * m + j) = a.value()(index[r][s], j);
  const Var in[] = {a};
  return a.tape().record(std::move(out), in, [a, index, per, m](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad_buffer(a.id());
    for (std::size_t r = 0; r < index.size(); ++r)
      for (std::size_t s = 0; s < per; ++s)
        for (std::size_t j = 0; j < m; ++j) ga(index[r][s], j) += g(r, s * m + j);
  }, "gather_concat_rows");
}

Var mean_rows(const Var& a) {
  require_matrix(a, "mean_rows");
  const std::size_t n = a.rows(), m = a.cols();
  Tensor out({1, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j] += a.value()(i, j);
  for (double& v : out.data()) v /= static_cast<double>(n);
  const Var in[] = {a};
  return a.tape().record(std::move(out), in, [a, n, m](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad_buffer(a.id());
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) ga(i, j) += g[j] * inv;
  }, "mean_rows");
}

Var sum_all(const Var& a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  const Var in[] = {a};
  return scalar_result(total, in, [a](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    Tensor& ga = t.grad_buffer(a.id());
    for (double& v : ga.data()) v += g;
  }, "sum_all");
}

Var mean_all(const Var& a) {
  return scale(sum_all(a), 1.0 / static_cast<double>(a.value().size()));
}

Var mse_loss(const Var& pred, const Tensor& target, const Tensor& weight) {
  if (pred.value().shape() != target.shape()) {
    throw ShapeError("mse_loss: prediction " + to_string(pred.value().shape()) + " vs target " +
                     to_string(target.shape()));
  }
  const bool weighted = !weight.empty();
  if (weighted && weight.shape() != target.shape()) throw ShapeError("mse_loss: weight shape");
  double total = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double w = weighted ? weight[i] : 1.0;
    const double e = pred.value()[i] - target[i];
    total += w * e * e;
    norm += w;
  }
  if (norm <= 0.0) throw NumericError("mse_loss: total weight is zero");
  const Var in[] = {pred};
  return scalar_result(total / norm, in, [pred, target, weight, weighted, norm](
      Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    Tensor& gp = t.grad_buffer(pred.id());
    for (std::size_t i = 0; i < gp.size(); ++i) {
      const double w = weighted ? weight[i] : 1.0;
      gp[i] += g * 2.0 * w * (pred.value()[i] - target[i]) / norm;
    }
  }, "mse_loss");
}

Var smape_loss(const Var& pred, const Tensor& target) {
  if (pred.value().shape() != target.shape()) throw ShapeError("smape_loss: shape mismatch");
  const std::size_t n = target.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = pred.value()[i], x = target[i];
    const double denom = std::abs(x) + std::abs(p);
    if (denom < 1e-12) continue;
    total += std::abs(x - p) / denom;
  }
  const Var in[] = {pred};
  return scalar_result(200.0 * total / static_cast<double>(n), in, [pred, target, n](
      Tape& t, std::size_t self) {
    const double g = t.grad(self)[0] * 200.0 / static_cast<double>(n);
    Tensor& gp = t.grad_buffer(pred.id());
    auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };
    for (std::size_t i = 0; i < n; ++i) {
      const double p = pred.value()[i], x = target[i];
      const double denom = std::abs(x) + std::abs(p);
      if (denom < 1e-12) continue;
      const double num = std::abs(x - p);
      gp[i] += g * (sign(p - x) * denom - num * sign(p)) / (denom * denom);
    }
  }, "smape_loss");
}

Var cross_entropy_loss(const Var& logits, std::size_t label) {
  require_matrix(logits, "cross_entropy_loss");
  if (logits.rows() != 1) throw ShapeError("cross_entropy_loss: expected a single logit row");
  if (label >= logits.cols()) {
    throw DataError("cross_entropy_loss: label " + std::to_string(label) + " out of range for " +
                    std::to_string(logits.cols()) + " classes");
  }
  const Tensor probs = softmax_lastdim(logits.value());
  const auto& z = logits.value().data();
  const double peak = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - peak);
  const double loss = peak + std::log(total) - z[label];
  const Var in[] = {logits};
  return scalar_result(loss, in, [logits, probs, label](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    Tensor& gl = t.grad_buffer(logits.id());
    for (std::size_t j = 0; j < gl.size(); ++j) {
      gl[j] += g * (probs[j] - (j == label ? 1.0 : 0.0));
    }
  }, "cross_entropy_loss");
}

}  // namespace perimid
