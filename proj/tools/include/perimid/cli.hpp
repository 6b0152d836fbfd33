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

#include <iosfwd>
#include <optional>
#include <string>

#include "perimid/dataio.hpp"
#include "perimid/model.hpp"
#include "perimid/tasks.hpp"
#include "perimid/training.hpp"

namespace perimid::cli {

/// Everything one invocation needs. Built from per-command defaults, then
/// the INI file named by --config, then command-line flags.
struct RunConfig {
  DatasetManifest data;
  std::string label_column;  // anomaly/classify CSV input
  ModelConfig model;
  TrainConfig train;
  TaskSpec task;
  std::optional<std::size_t> season;
  std::size_t train_samples = 64;  // classify, synthetic data
  std::size_t test_samples = 64;
  std::size_t k_min = 2;
  std::size_t k_max = 5;
  std::string out;
  std::string checkpoint;
  std::string loss_csv;
  std::string table_csv;
  std::string mask_csv;
  bool flows = false;
};

/// Defaults for a subcommand (gradcheck and classify use small models).
RunConfig default_config(const std::string& command);

/// Applies an INI file on top of `config`. Sections: data, model, train,
/// task, output. Unknown keys are a ConfigError.
void apply_config_file(RunConfig& config, const std::string& path);

/// Parses argv and runs one subcommand. Returns 0 on success, 1 on a usage
/// or configuration error and 2 on a runtime failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace perimid::cli
