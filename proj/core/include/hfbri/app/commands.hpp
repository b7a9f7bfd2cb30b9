// Copyright 2026 The hfbri Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#pragma once

// The seven CLI commands as library functions. Each reads a RunConfig,
// applies flag overrides, and writes CSV reports (and checkpoints) into the
// output directory. Outputs are a pure function of (config, inputs, seed).

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "hfbri/app/run_config.hpp"

namespace hfbri::app {

struct CommandOptions {
  std::optional<std::filesystem::path> config;      // defaults when absent
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::uint64_t> seed;                 // overrides config "seed"
  std::size_t threads = 1;
  std::optional<std::filesystem::path> out;          // overrides config "output"
  std::optional<std::filesystem::path> input;        // extract-features: one cloud file
};

// Loads the config (or defaults) and applies flag overrides. Throws
// ConfigError when no seed is available.
RunConfig resolve_config(const CommandOptions& options);

// Model config to use with a checkpoint: the checkpoint's own unless the
// run config set "model" explicitly, in which case the two must agree
// (ConfigError listing the differing fields).
void reconcile_model(RunConfig& config, const mae::ModelConfig& checkpoint_model);

void cmd_pretrain(const CommandOptions& options, std::ostream& log);
void cmd_probe(const CommandOptions& options, std::ostream& log);
void cmd_eval_grid(const CommandOptions& options, std::ostream& log);
void cmd_fewshot(const CommandOptions& options, std::ostream& log);
void cmd_finetune(const CommandOptions& options, std::ostream& log);
void cmd_extract_features(const CommandOptions& options, std::ostream& log);
void cmd_ablate(const CommandOptions& options, std::ostream& log);

const std::vector<std::string>& command_names();

// Dispatches by name; ConfigError for an unknown command.
void run_command(std::string_view name, const CommandOptions& options, std::ostream& log);

// 0 none, 2 config, 3 data (including parse and size errors), 4 numeric,
// 1 anything else.
int exit_code_for(const std::exception_ptr& error);

}  // namespace hfbri::app
