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

#include <functional>
#include <vector>

#include "vlad/core/adam.hpp"
#include "vlad/harness/model.hpp"

namespace vlad::harness {

/// Loss components of one optimizer step. total is the value minimized:
/// align + lambda * diff + tlg. diff is the timestep-weighted noise loss
/// used for training; diff_plain is the unweighted mean squared noise error
/// on the same batch.
struct StepLog {
  int epoch = 0;
  std::size_t step = 0;
  double total = 0;
  double align = 0;
  double diff = 0;
  double diff_plain = 0;
  double tlg = 0;
};

struct EpochSummary {
  int epoch = 0;
  double median_total = 0;
  double median_align = 0;
  double median_diff = 0;
  double median_tlg = 0;
  double mean_diff_plain = 0;
  double seconds = 0;
};

struct TrainResult {
  Model model;
  AdamState<float> optimizer;
  std::vector<StepLog> steps;
  std::vector<EpochSummary> epochs;
};

/// Number of noise draws per scene in each diffusion batch.
inline constexpr std::size_t kNoiseDraws = 2;

/// Joint training loop. Without a dataset file, every epoch draws
/// dataset_size fresh scenes; with one, the file's records are reshuffled
/// each epoch. Throws NumericError if a loss or parameter turns non-finite.
TrainResult train(const RunConfig& cfg, const std::function<void(const EpochSummary&)>& on_epoch = {});

/// One optimizer step on the given scenes (exposed for tests).
StepLog train_step(Model& model, AdamState<float>& optimizer, const std::vector<data::SceneSpec>& scenes, Rng& noise);

}  // namespace vlad::harness
