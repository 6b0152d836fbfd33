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

#include <filesystem>

#include "perimid/model.hpp"

namespace perimid {

// Checkpoint layout:
//   "PMF1"                      4 magic bytes
//   uint64 little-endian        byte length of the JSON header
//   JSON header                 {"format": 1, "model": ModelConfig,
//                                "blocks": [{"name", "shape"}...]}
//   float64 little-endian       each block's values, declaration order

void save_checkpoint(const PeriMidFormer& model, const std::filesystem::path& path);
PeriMidFormer load_checkpoint(const std::filesystem::path& path);

}  // namespace perimid
