// Copyright 2026 The vlad Authors.
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

#include <CLI11.hpp>

#include <iostream>

#include "vlad/core/error.hpp"
#include "vlad/harness/commands.hpp"

namespace {

vlad::harness::RunConfig config_from(const std::string& path) {
  vlad::harness::RunConfig cfg = vlad::harness::load_config(path);
  vlad::harness::apply_env_overrides(cfg);
  vlad::harness::validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace vlad::harness;
  CLI::App app{"vlad: layout-guided glyph diffusion at desk scale"};
  app.require_subcommand(1);

  std::string config, out, ckpt, prompts, testset;
  bool deterministic = false;

  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint with loss logs");
  train_cmd->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", out, "output directory")->required();

  auto* sample_cmd = app.add_subcommand("sample", "write one PGM per prompt line");
  sample_cmd->add_option("--ckpt", ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
  sample_cmd->add_option("--prompts", prompts, "prompt file, one per line")->required()->check(CLI::ExistingFile);
  sample_cmd->add_option("--out", out, "output directory")->required();
  sample_cmd->add_flag("--deterministic", deterministic, "noise-free layout and reverse process");

  auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a test set");
  eval_cmd->add_option("--ckpt", ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--testset", testset, "dataset file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", out, "report CSV")->required();

  auto* ablate_cmd = app.add_subcommand("ablate", "train and score the three model variants");
  ablate_cmd->add_option("--config", config, "base config file")->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("--out", out, "report CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      cmd_train(config_from(config), out, &std::cerr);
      std::cout << "wrote " << out << "\n";
    } else if (*sample_cmd) {
      const auto paths = cmd_sample(ckpt, prompts, out, deterministic);
      std::cout << "wrote " << paths.size() << " images to " << out << "\n";
    } else if (*eval_cmd) {
      cmd_eval(ckpt, testset, out);
      std::cout << read_text(out);
    } else if (*ablate_cmd) {
      cmd_ablate(config_from(config), out, &std::cerr);
      std::cout << read_text(out);
    }
  } catch (const vlad::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
