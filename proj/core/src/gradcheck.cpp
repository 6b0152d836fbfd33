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

#include "perimid/gradcheck.hpp"

#include <cmath>

#include "perimid/errors.hpp"

namespace perimid {

namespace {

double evaluate(const Objective& f, const ParameterStore& params) {
  Tape tape;
  Binding bound(tape, params, false);
  const Var out = f(bound);
  if (out.value().size() != 1) throw ShapeError("grad_check: objective is not scalar");
  return out.value()[0];
}

}  // namespace

GradCheckReport grad_check(const Objective& f, ParameterStore& params, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) throw ConfigError("grad_check: eps must lie in [1e-7, 1e-3]");

  std::vector<Tensor> analytic;
  {
    Tape tape;
    Binding bound(tape, params, true);
    const Var out = f(bound);
    if (out.value().size() != 1) throw ShapeError("grad_check: objective is not scalar");
    tape.backward(out);
    analytic = bound.gradients();
  }

  GradCheckReport report;
  for (ParamId id = 0; id < params.size(); ++id) {
    BlockError block{params[id].name};
    Tensor& value = params.value(id);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      double up = 0.0, down = 0.0;
      try {
        value[i] = saved + eps;
        up = evaluate(f, params);
        value[i] = saved - eps;
        down = evaluate(f, params);
      } catch (...) {
        value[i] = saved;
        throw;
      }
      value[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = std::abs(analytic[id][i] - numeric) / (std::abs(numeric) + 1e-12);
      if (err > block.max_relative_error || i == 0) {
        block.max_relative_error = err;
        block.worst_index = i;
        block.analytic = analytic[id][i];
        block.numeric = numeric;
      }
    }
    report.max_relative_error = std::max(report.max_relative_error, block.max_relative_error);
    report.blocks.push_back(std::move(block));
  }
  return report;
}

}  // namespace perimid
