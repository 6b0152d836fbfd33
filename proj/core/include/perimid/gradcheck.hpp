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

#include <functional>
#include <string>
#include <vector>

#include "perimid/autodiff.hpp"
#include "perimid/parameters.hpp"

namespace perimid {

struct BlockError {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::vector<BlockError> blocks;
};

/// Scalar objective built on a fresh tape from the bound parameters.
using Objective = std::function<Var(const Binding&)>;

/// Compares tape gradients against central differences for every scalar in
/// every parameter block. Per element the error is
/// |analytic - numeric| / (|numeric| + 1e-12). eps must lie in [1e-7, 1e-3].
/// The store is restored before returning.
GradCheckReport grad_check(const Objective& f, ParameterStore& params, double eps = 1e-6);

}  // namespace perimid
