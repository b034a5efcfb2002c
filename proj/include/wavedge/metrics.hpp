/* Copyright 2026 The wavedge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef WAVEDGE_METRICS_HPP_
#define WAVEDGE_METRICS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wavedge/autodiff.hpp"

namespace wavedge::metrics {

// --- training objective -------------------------------------------------------

/// Mean BCE over the pixels plus 1 - 2 sum(P g) / (sum(P) + sum(g) + 1),
/// computed per batch item and averaged over the batch. gt must be binary.
/// Log terms are evaluated only where their gt weight is nonzero and the
/// argument is floored at 1e-12.
Real bce_dice_loss(const Tensor& probs, const Tensor& gt);

/// The same objective on logits, using the stable form
/// max(z, 0) - z g + log(1 + exp(-|z|)) for the BCE term.
Var bce_dice_loss_logits(const Var& logits, const Tensor& gt);

/// Unweighted sum over exactly kSideOutputs scales.
inline constexpr size_t kSideOutputs = 5;
Real total_loss(std::span<const Tensor> probs, std::span<const Tensor> gts);
Var total_loss_logits(std::span<const Var> logits, std::span<const Tensor> gts);

// --- evaluation ---------------------------------------------------------------

struct ConfusionCounts {
  int64_t tp = 0, tn = 0, fp = 0, fn = 0;
  int64_t total() const { return tp + tn + fp + fn; }
};

/// pred >= threshold is positive; gt must be binary. Shapes must match.
ConfusionCounts confusion(const Tensor& pred, const Tensor& gt, Real threshold = 0.5);

struct ImageMetrics {
  std::string name;
  ConfusionCounts counts;
  double dice = 0, iou = 0, accuracy = 0, precision = 0, recall = 0;
  double mae = 0;  // mean |P - g|, in [0, 1]
};

/// Dice/IoU are 1 when TP + FP + FN = 0. Precision (recall) is 1 when there
/// are no predicted (true) positives and nothing was missed (falsely added),
/// and 0 when its denominator is zero but the other error count is not.
ImageMetrics metrics_from_counts(const ConfusionCounts& c);

struct MetricReport {
  std::string dataset;
  std::vector<ImageMetrics> images;
  // Unweighted means over images, in [0, 1].
  double mdice = 0, miou = 0, accuracy = 0, precision = 0, recall = 0, mae = 0;

  size_t n_images() const { return images.size(); }
};

struct EvalPair {
  std::string name;
  Tensor prediction;  // probabilities (or a binary mask) in [0, 1]
  Tensor gt;          // binary
};

MetricReport evaluate(const std::string& dataset, const std::vector<EvalPair>& pairs,
                      Real threshold = 0.5);
MetricReport aggregate(const std::string& dataset, std::vector<ImageMetrics> images);

/// Order-stable pairwise summation.
double pairwise_sum(std::span<const double> values);

/// CSV header line of report_csv.
inline constexpr const char* kCsvHeader =
    "dataset,n_images,mIoU,mDice,MAE,accuracy,precision,recall";

/// Header plus one row; metrics in percent with one decimal.
std::string report_csv(const MetricReport& report);
/// Full-precision mirror including per-image rows.
std::string report_json(const MetricReport& report);

}  // namespace wavedge::metrics

#endif  // WAVEDGE_METRICS_HPP_
