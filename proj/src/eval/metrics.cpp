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

#include "vlad/eval/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "vlad/align/encoder.hpp"
#include "vlad/core/error.hpp"
#include "vlad/data/glyphs.hpp"

namespace vlad::eval {

namespace {

constexpr int kSide = align::kCanvasSide;
constexpr int kBox = align::kGlyphSize;
constexpr int kOrigins = align::kMaxOrigin + 1;

std::vector<Detection> detect_polarity(const std::array<std::uint8_t, data::kPixels>& bits, const OcrOptions& options) {
  const auto& glyphs = data::glyph_bitmaps();
  // scores[g][r][c]
  std::vector<int> scores(static_cast<std::size_t>(align::kGlyphCount * kOrigins * kOrigins));
  auto at = [&](int g, int r, int c) -> int& {
    return scores[static_cast<std::size_t>((g * kOrigins + r) * kOrigins + c)];
  };
  for (int g = 0; g < align::kGlyphCount; ++g) {
    const auto& t = glyphs[static_cast<std::size_t>(g)];
    for (int r = 0; r < kOrigins; ++r) {
      for (int c = 0; c < kOrigins; ++c) {
        int match = 0;
        for (int y = 0; y < kBox; ++y) {
          for (int x = 0; x < kBox; ++x) {
            match += t[static_cast<std::size_t>(y * kBox + x)] == bits[static_cast<std::size_t>((r + y) * kSide + c + x)];
          }
        }
        at(g, r, c) = match;
      }
    }
  }
  std::vector<Detection> candidates;
  for (int g = 0; g < align::kGlyphCount; ++g) {
    for (int r = 0; r < kOrigins; ++r) {
      for (int c = 0; c < kOrigins; ++c) {
        const int s = at(g, r, c);
        if (s < options.threshold) continue;
        bool peak = true;
        for (int dr = -1; dr <= 1 && peak; ++dr) {
          for (int dc = -1; dc <= 1 && peak; ++dc) {
            const int rr = r + dr, cc = c + dc;
            if (rr < 0 || cc < 0 || rr >= kOrigins || cc >= kOrigins) continue;
            peak = at(g, rr, cc) <= s;
          }
        }
        if (peak) candidates.push_back({g, r, c, s});
      }
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  std::vector<Detection> kept;
  for (const Detection& d : candidates) {
    const align::GlyphObject box{d.glyph, d.row, d.col};
    const bool clash = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return align::boxes_overlap(box, {k.glyph, k.row, k.col});
    });
    if (!clash) kept.push_back(d);
  }
  std::sort(kept.begin(), kept.end(), [](const Detection& a, const Detection& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  return kept;
}

}  // namespace

std::vector<Detection> ocr_detect(std::span<const float> canvas, const OcrOptions& options) {
  if (canvas.size() != data::kPixels) throw DimensionError("ocr_detect needs 256 pixels");
  std::array<std::uint8_t, data::kPixels> bits{}, flipped{};
  for (std::size_t i = 0; i < data::kPixels; ++i) {
    if (!(canvas[i] >= 0.0F && canvas[i] <= 1.0F)) throw DomainError("ocr_detect: pixel outside [0, 1]");
    bits[i] = canvas[i] >= 0.5F ? 1 : 0;
    flipped[i] = 1 - bits[i];
  }
  std::vector<Detection> direct = detect_polarity(bits, options);
  std::vector<Detection> inverse = detect_polarity(flipped, options);
  if (inverse.size() != direct.size()) return inverse.size() > direct.size() ? inverse : direct;
  // Equal counts: glyphs are drawn "on" over an "off" background, so the
  // polarity whose majority is off wins.
  std::size_t on = 0;
  for (std::uint8_t b : bits) on += b;
  return 2 * on > data::kPixels ? inverse : direct;
}

OcrReport ocr_metrics(const std::vector<std::vector<Detection>>& detections,
                      const std::vector<std::vector<align::GlyphObject>>& truths, const OcrOptions& options) {
  if (detections.size() != truths.size()) {
    throw DimensionError("ocr_metrics: " + std::to_string(detections.size()) + " detection lists for " +
                         std::to_string(truths.size()) + " images");
  }
  OcrReport report;
  std::size_t exact = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    std::vector<bool> used(detections[i].size(), false);
    std::size_t tp = 0;
    for (const auto& truth : truths[i]) {
      for (std::size_t j = 0; j < detections[i].size(); ++j) {
        const Detection& d = detections[i][j];
        if (!used[j] && d.glyph == truth.glyph && std::abs(d.row - truth.row) <= options.tolerance &&
            std::abs(d.col - truth.col) <= options.tolerance) {
          used[j] = true;
          ++tp;
          break;
        }
      }
    }
    report.true_positives += tp;
    report.false_positives += detections[i].size() - tp;
    report.false_negatives += truths[i].size() - tp;
    if (tp == truths[i].size() && tp == detections[i].size()) ++exact;
  }
  const double tp = static_cast<double>(report.true_positives);
  const double fp = static_cast<double>(report.false_positives);
  const double fn = static_cast<double>(report.false_negatives);
  report.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  report.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  const double pr = report.precision + report.recall;
  report.f_measure = pr > 0 ? 2 * report.precision * report.recall / pr : 0.0;
  report.accuracy = truths.empty() ? 0.0 : static_cast<double>(exact) / static_cast<double>(truths.size());
  return report;
}

double clip_proxy(const Tensor<double>& t, const Tensor<double>& v) {
  if (t.rank() != 2 || t.shape() != v.shape()) {
    throw DimensionError("clip_proxy: text " + shape_string(t.shape()) + " vs image " + shape_string(v.shape()));
  }
  if (t.rows() == 0) throw DimensionError("clip_proxy: empty batch");
  double total = 0;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    double dot = 0, nt = 0, nv = 0;
    for (std::size_t j = 0; j < t.cols(); ++j) {
      dot += t.at(i, j) * v.at(i, j);
      nt += t.at(i, j) * t.at(i, j);
      nv += v.at(i, j) * v.at(i, j);
    }
    if (!(nt > 0 && nv > 0)) throw DomainError("clip_proxy: zero embedding");
    total += dot / std::sqrt(nt * nv);
  }
  return total / static_cast<double>(t.rows());
}

double clip_proxy_score(const ParamSet<float>& params, const std::vector<align::TokenIds>& prompts,
                        const Tensor<float>& canvases, bool use_ccm) {
  if (prompts.empty()) throw DimensionError("clip_proxy_score: empty batch");
  const Tensor<float> t = align::embed_prompts(params, prompts, use_ccm);
  const Tensor<float> v = align::embed_images(params, canvases);
  return clip_proxy(t.cast<double>(), v.cast<double>());
}

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Matrix to_eigen(const Tensor<double>& t) {
  return Eigen::Map<const Matrix>(t.values().data(), static_cast<Eigen::Index>(t.rows()),
                                  static_cast<Eigen::Index>(t.cols()));
}

Tensor<double> from_eigen(const Matrix& m) {
  return Tensor<double>({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                        std::vector<double>(m.data(), m.data() + m.size()));
}

Matrix sqrt_psd(const Matrix& s) {
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) throw DomainError("matrix_sqrt_psd: matrix is not symmetric");
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericError("matrix_sqrt_psd: eigendecomposition failed");
  Eigen::VectorXd values = eig.eigenvalues();
  if (values.minCoeff() < -1e-8 * scale) throw DomainError("matrix_sqrt_psd: matrix is indefinite");
  values = values.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

FeatureMoments fit_moments(const Tensor<double>& features) {
  if (features.rank() != 2 || features.rows() < 2) {
    throw DimensionError("fit_moments needs at least two feature rows, got " + shape_string(features.shape()));
  }
  const Matrix x = to_eigen(features);
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Matrix centered = x.rowwise() - mu;
  const Matrix cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
  return {std::vector<double>(mu.data(), mu.data() + mu.size()), from_eigen(cov), features.rows()};
}

void validate(const FeatureMoments& m) {
  const std::size_t d = m.mean.size();
  if (m.count < 2) throw DomainError("feature moments need at least two samples");
  if (m.covariance.rank() != 2 || m.covariance.rows() != d || m.covariance.cols() != d) {
    throw DimensionError("feature moments: mean of width " + std::to_string(d) + " with covariance " +
                         shape_string(m.covariance.shape()));
  }
  const Matrix c = to_eigen(m.covariance);
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-8) throw DomainError("covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-8) throw DomainError("covariance is not positive semi-definite");
}

Tensor<double> matrix_sqrt_psd(const Tensor<double>& s) {
  if (s.rank() != 2 || s.rows() != s.cols()) throw DimensionError("matrix_sqrt_psd needs a square matrix");
  return from_eigen(sqrt_psd(to_eigen(s)));
}

double fid_proxy(const FeatureMoments& real, const FeatureMoments& generated) {
  if (real.mean.size() != generated.mean.size()) {
    throw DimensionError("fid_proxy: feature widths " + std::to_string(real.mean.size()) + " and " +
                         std::to_string(generated.mean.size()));
  }
  validate(real);
  validate(generated);
  double mean_term = 0;
  for (std::size_t i = 0; i < real.mean.size(); ++i) {
    const double diff = real.mean[i] - generated.mean[i];
    mean_term += diff * diff;
  }
  const Matrix s1 = to_eigen(real.covariance);
  const Matrix s2 = to_eigen(generated.covariance);
  const Matrix root1 = sqrt_psd(s1);
  Matrix inner = root1 * s2 * root1;
  inner = 0.5 * (inner + inner.transpose());
  const double trace = s1.trace() + s2.trace() - 2.0 * sqrt_psd(inner).trace();
  if (trace < -1e-6) throw NumericError("fid_proxy: negative trace term " + std::to_string(trace));
  return mean_term + std::max(trace, 0.0);
}

}  // namespace vlad::eval
