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

#include <span>
#include <vector>

#include "vlad/align/prompt.hpp"
#include "vlad/core/params.hpp"

namespace vlad::eval {

struct Detection {
  int glyph = 0;
  int row = 0;
  int col = 0;
  int score = 0;  // matching cells out of 25
};

struct OcrOptions {
  int threshold = 23;  // of 25 cells
  int tolerance = 1;   // +-cells for a positional match
};

/// Binarizes at 0.5, matches every glyph template at all 12 x 12 origins in
/// both polarities, keeps local maxima scoring >= threshold, then greedily
/// suppresses overlapping boxes by score. The polarity with more detections
/// wins (ties keep the image as-is). Results are sorted by (row, col).
std::vector<Detection> ocr_detect(std::span<const float> canvas, const OcrOptions& options = {});

struct OcrReport {
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f_measure = 0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

/// Micro-averaged over all images. A true positive is a same-glyph pair with
/// |drow|, |dcol| <= tolerance under one-to-one greedy matching. Accuracy is
/// the fraction of images whose detections match the truth exactly (every
/// truth and every detection paired).
OcrReport ocr_metrics(const std::vector<std::vector<Detection>>& detections,
                      const std::vector<std::vector<align::GlyphObject>>& truths, const OcrOptions& options = {});

/// Mean of row-wise cosine similarity between t and v ([N x d] each).
double clip_proxy(const Tensor<double>& t, const Tensor<double>& v);
/// Composes the prompts and encodes the canvases with the given encoders,
/// then averages cos(t_i, v_i).
double clip_proxy_score(const ParamSet<float>& params, const std::vector<align::TokenIds>& prompts,
                        const Tensor<float>& canvases, bool use_ccm = true);

struct FeatureMoments {
  std::vector<double> mean;
  Tensor<double> covariance;  // [d x d]
  std::size_t count = 0;
};

/// Sample mean and unbiased covariance of rows. Needs at least 2 rows.
FeatureMoments fit_moments(const Tensor<double>& features);
/// Checks symmetry (1e-8) and eigenvalues (>= -1e-8).
void validate(const FeatureMoments& m);

/// Q sqrt(max(L, 0)) Q^T from a symmetric eigendecomposition. Throws
/// DomainError for asymmetry or eigenvalues below -1e-8 (relative to the
/// matrix scale when it exceeds 1).
Tensor<double> matrix_sqrt_psd(const Tensor<double>& s);

/// ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2).
double fid_proxy(const FeatureMoments& real, const FeatureMoments& generated);

}  // namespace vlad::eval
