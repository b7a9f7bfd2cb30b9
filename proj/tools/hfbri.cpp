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
// hfbri: command-line front end for pretraining, probing, finetuning,
// feature dumps and ablation sweeps.

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hfbri/app/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Rotation-invariant masked autoencoder for point clouds"};
  app.require_subcommand(1);
  hfbri::app::CommandOptions options;
  std::string config, checkpoint, out, input;
  std::uint64_t seed = 0;

  for (const auto& name : hfbri::app::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON run config (defaults when omitted)")->check(CLI::ExistingFile);
    sub->add_option("--checkpoint", checkpoint, "Model checkpoint (.hfbm)");
    sub->add_option("--seed", seed, "Root seed; overrides the config");
    sub->add_option("--threads", options.threads, "Worker thread cap")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "Output directory; overrides the config");
    if (name == "extract-features") {
      sub->add_option("--input", input, "Single cloud file (.off, .ply, .xyz)")->check(CLI::ExistingFile);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // Usage problems are configuration errors.
    return code == 0 ? 0 : 2;
  }

  auto* sub = app.get_subcommands().front();
  if (sub->count("--config")) options.config = config;
  if (sub->count("--checkpoint")) options.checkpoint = checkpoint;
  if (sub->count("--seed")) options.seed = seed;
  if (sub->count("--out")) options.out = out;
  if (!input.empty()) options.input = input;

  std::exception_ptr error;
  try {
    hfbri::app::run_command(sub->get_name(), options, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "hfbri " << sub->get_name() << ": " << e.what() << '\n';
    error = std::current_exception();
  } catch (...) {
    error = std::current_exception();
  }
  return hfbri::app::exit_code_for(error);
}
