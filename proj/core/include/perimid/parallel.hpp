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

namespace perimid {

/// Worker count for evaluation fan-out: PERIMID_THREADS when set to a
/// positive integer, else the hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs fn(0..n-1) on up to `workers` threads. fn must not touch shared
/// mutable state. The first exception thrown is rethrown after all workers
/// join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t workers = worker_count());

}  // namespace perimid
