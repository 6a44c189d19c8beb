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

#include "vlad/harness/commands.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

#include "vlad/align/encoder.hpp"
#include "vlad/core/error.hpp"
#include "vlad/eval/metrics.hpp"
#include "vlad/harness/checkpoint.hpp"

namespace vlad::harness {

namespace fs = std::filesystem;

std::string run_id_of(const RunConfig& cfg) {
  return std::string(ablation_name(cfg.ablation)) + "_s" + std::to_string(cfg.seed);
}

std::string format_epoch_log(const std::vector<EpochSummary>& epochs) {
  std::string out = "epoch,total,align,diff,tlg,diff_plain\n";
  for (const auto& e : epochs) {
    out += std::to_string(e.epoch);
    for (double v : {e.median_total, e.median_align, e.median_diff, e.median_tlg, e.mean_diff_plain}) {
      out += ',' + format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::string format_step_log(const std::vector<StepLog>& steps) {
  std::string out = "step,epoch,total,align,diff,tlg,diff_plain\n";
  for (const auto& s : steps) {
    out += std::to_string(s.step) + ',' + std::to_string(s.epoch);
    for (double v : {s.total, s.align, s.diff, s.tlg, s.diff_plain}) out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

TrainResult cmd_train(const RunConfig& cfg, const fs::path& out_dir, std::ostream* log) {
  fs::create_directories(out_dir);
  auto on_epoch = [&](const EpochSummary& e) {
    if (!log) return;
    char line[200];
    std::snprintf(line, sizeof(line), "epoch %3d  total %.4f  align %.4f  diff %.4f  tlg %.4f  (%.1fs)\n", e.epoch,
                  e.median_total, e.median_align, e.median_diff, e.median_tlg, e.seconds);
    *log << line << std::flush;
  };
  TrainResult result = train(cfg, on_epoch);
  checkpoint_save(out_dir / kCheckpointFile, result.model, &result.optimizer);
  write_text(out_dir / kEpochLogFile, format_epoch_log(result.epochs));
  write_text(out_dir / kStepLogFile, format_step_log(result.steps));
  std::vector<data::Record> test;
  for (const auto& s : test_scenes(cfg)) test.push_back(data::make_record(s));
  data::dataset_write(out_dir / kTestSetFile, test);
  return result;
}

std::vector<PromptLine> parse_prompt_file(const std::string& text) {
  std::vector<PromptLine> out;
  std::istringstream in(text);
  std::string line;
  for (std::size_t index = 0; std::getline(in, line); ++index) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    try {
      out.push_back({index, align::parse_prompt(line)});
    } catch (const Error& e) {
      throw FormatError("prompts line " + std::to_string(index + 1) + ": " + e.what());
    }
  }
  return out;
}

std::vector<fs::path> cmd_sample(const fs::path& checkpoint, const fs::path& prompts, const fs::path& out_dir,
                                 bool deterministic) {
  const Checkpoint ckpt = checkpoint_load(checkpoint);
  const auto lines = parse_prompt_file(read_text(prompts));
  fs::create_directories(out_dir);
  if (lines.empty()) return {};
  std::vector<align::TokenIds> ids;
  for (const auto& l : lines) ids.push_back(align::tokenize(align::emit_prompt(l.spec)));
  const Tensor<float> images = generate(ckpt.model, ids, {deterministic, thread_count()});
  std::vector<fs::path> paths;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "sample_%04zu.pgm", lines[i].line);
    const fs::path path = out_dir / name;
    write_pgm(path, images.values().subspan(i * data::kPixels, data::kPixels), align::kCanvasSide, align::kCanvasSide);
    paths.push_back(path);
  }
  return paths;
}

ReportRow evaluate_images(const ParamSet<float>& evaluator, bool use_ccm, const std::vector<data::SceneSpec>& specs,
                          const Tensor<float>& reference, const Tensor<float>& generated, const std::string& run_id) {
  if (specs.empty() || reference.rows() != specs.size() || generated.rows() != specs.size()) {
    throw DimensionError("evaluate_images: scene and canvas counts disagree");
  }
  ReportRow row;
  row.run_id = run_id;
  const auto real = eval::fit_moments(align::embed_images(evaluator, reference).cast<double>());
  const auto fake = eval::fit_moments(align::embed_images(evaluator, generated).cast<double>());
  row.fid_proxy = eval::fid_proxy(real, fake);
  row.clip_proxy = eval::clip_proxy_score(evaluator, tokenize_all(specs), generated, use_ccm);

  std::vector<std::vector<eval::Detection>> found;
  std::vector<std::vector<align::GlyphObject>> truths;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    found.push_back(eval::ocr_detect(generated.values().subspan(i * data::kPixels, data::kPixels)));
    truths.push_back(specs[i].objects);
  }
  const eval::OcrReport ocr = eval::ocr_metrics(found, truths);
  row.ocr_accuracy = ocr.accuracy;
  row.precision = ocr.precision;
  row.recall = ocr.recall;
  row.f_measure = ocr.f_measure;
  return row;
}

ReportRow evaluate_model(const Model& model, const Model& evaluator, const std::vector<data::Record>& testset,
                         const std::string& run_id) {
  std::vector<data::SceneSpec> specs;
  std::vector<data::Canvas> reference;
  for (const auto& r : testset) {
    specs.push_back(r.spec);
    reference.push_back(data::to_canvas(r));
  }
  const Tensor<float> generated = generate(model, tokenize_all(specs), {false, thread_count()});
  return evaluate_images(evaluator.params, uses_ccm(evaluator.config), specs, canvas_rows(reference), generated,
                         run_id);
}

ReportRow cmd_eval(const fs::path& checkpoint, const fs::path& testset, const fs::path& out_csv) {
  const Checkpoint ckpt = checkpoint_load(checkpoint);
  const ReportRow row = evaluate_model(ckpt.model, ckpt.model, data::dataset_read(testset), run_id_of(ckpt.model.config));
  write_text(out_csv, format_report({row}));
  return row;
}

std::vector<ReportRow> run_ablation(const RunConfig& base, std::ostream* log) {
  const Ablation order[] = {Ablation::kNoCcm, Ablation::kNoGuidance, Ablation::kFull};
  std::vector<Model> models;
  for (Ablation a : order) {
    RunConfig cfg = base;
    cfg.ablation = a;
    if (log) *log << "training " << ablation_name(a) << " (seed " << cfg.seed << ")\n" << std::flush;
    models.push_back(train(cfg).model);
  }
  std::vector<data::Record> test;
  for (const auto& s : test_scenes(base)) test.push_back(data::make_record(s));
  const Model& full = models.back();
  std::vector<ReportRow> rows;
  for (const Model& m : models) rows.push_back(evaluate_model(m, full, test, ablation_name(m.config.ablation)));
  return rows;
}

std::vector<ReportRow> cmd_ablate(const RunConfig& base, const fs::path& out_csv, std::ostream* log) {
  auto rows = run_ablation(base, log);
  write_text(out_csv, format_report(rows));
  return rows;
}

}  // namespace vlad::harness
