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

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "vlad/data/glyphs.hpp"
#include "vlad/harness/io.hpp"
#include "vlad/harness/trainer.hpp"

namespace vlad::harness {

/// File names written by cmd_train inside its output directory.
inline constexpr const char* kCheckpointFile = "model.ckpt";
inline constexpr const char* kEpochLogFile = "epochs.csv";
inline constexpr const char* kStepLogFile = "steps.csv";
inline constexpr const char* kTestSetFile = "testset.bin";

std::string format_epoch_log(const std::vector<EpochSummary>& epochs);
std::string format_step_log(const std::vector<StepLog>& steps);

/// Trains, then writes the checkpoint (with optimizer state), per-epoch and
/// per-step loss logs, and the held-out test set. Progress lines go to log
/// when it is non-null.
TrainResult cmd_train(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream* log = nullptr);

struct PromptLine {
  std::size_t line = 0;  // 0-based line index in the file
  align::PromptSpec spec;
};

/// One prompt per non-blank line; lines starting with '#' are skipped.
/// Throws FormatError naming the 1-based line number on a parse failure.
std::vector<PromptLine> parse_prompt_file(const std::string& text);

/// Writes sample_<line>.pgm per prompt into out_dir and returns the paths.
std::vector<std::filesystem::path> cmd_sample(const std::filesystem::path& checkpoint,
                                              const std::filesystem::path& prompts,
                                              const std::filesystem::path& out_dir, bool deterministic);

/// Metrics for generated canvases [N x 256] against the reference scenes,
/// using the encoders in `evaluator` for both proxy scores. Real features
/// come from `reference` canvases [N x 256].
ReportRow evaluate_images(const ParamSet<float>& evaluator, bool use_ccm, const std::vector<data::SceneSpec>& specs,
                          const Tensor<float>& reference, const Tensor<float>& generated, const std::string& run_id);

/// Generates one canvas per test record with `model` and scores it with
/// `evaluator`'s encoders.
ReportRow evaluate_model(const Model& model, const Model& evaluator, const std::vector<data::Record>& testset,
                         const std::string& run_id);

/// Loads the checkpoint and test set, evaluates, writes a one-row report.
ReportRow cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& testset,
                   const std::filesystem::path& out_csv);

/// Trains no_ccm, no_guidance and full from the same seed and data, then
/// evaluates all three with the full model's encoders so the proxy scores
/// share one embedding space. Rows come back in that order.
std::vector<ReportRow> run_ablation(const RunConfig& base, std::ostream* log = nullptr);
std::vector<ReportRow> cmd_ablate(const RunConfig& base, const std::filesystem::path& out_csv,
                                  std::ostream* log = nullptr);

std::string run_id_of(const RunConfig& cfg);

}  // namespace vlad::harness
