// Copyright 2026 The advdet Authors
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

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "advdet/core.hpp"

namespace advdet {

/// Normalized cross-correlation over all pixels of all channels jointly
/// (one mean per image), clamped to [0, 1]. Throws degenerate_input when
/// either image is constant.
double compute_ncc(const ImageBuffer& a, const ImageBuffer& b);

/// 1 - compute_ncc(a, b); always in [0, 1].
double distortion(const ImageBuffer& a, const ImageBuffer& b);

double iou(const BoundingBox& a, const BoundingBox& b) noexcept;

struct GroundTruthBox {
  BoundingBox box;
  int class_id = 0;
  /// VOC "difficult" / COCO "iscrowd": neither counted nor penalized unless
  /// difficult boxes are explicitly included.
  bool difficult = false;

  friend bool operator==(const GroundTruthBox&, const GroundTruthBox&) = default;
};

struct ImageAnnotation {
  std::string image_id;
  int height = 0;
  int width = 0;
  std::vector<GroundTruthBox> boxes;
};

struct EvaluationScore {
  double map_value = 0.0;
  /// AP (averaged over IoU thresholds) per class with at least one counted
  /// ground-truth instance.
  std::map<int, double> per_class_ap;
};

/// 0.50:0.05:0.95.
std::vector<double> coco_iou_thresholds();
/// {0.50}.
std::vector<double> voc_iou_thresholds();

/// Average precision of one ranked list: all-point interpolation of the
/// precision/recall curve (area under the monotone precision envelope).
/// `is_tp` is ordered by descending confidence.
double average_precision(const std::vector<bool>& is_tp, std::size_t num_ground_truth);

/// Mean AP over classes and IoU thresholds. predictions[i] and
/// ground_truth[i] describe the same image. Greedy matching in descending
/// confidence; each ground truth box matches at most once.
EvaluationScore compute_map(std::span<const DetectionSet> predictions,
                            std::span<const ImageAnnotation> ground_truth,
                            std::span<const double> iou_thresholds,
                            bool include_difficult = false);

/// 100 * (1 - adversarial / baseline), in percent.
double success_rate_from_map(double baseline_map, double adversarial_map);

/// Fraction of original detections with no adversarial detection of the same
/// class at IoU >= iou_match. Throws not_attackable when `original` is empty.
double per_image_success(const DetectionSet& original, const DetectionSet& adversarial,
                         double iou_match = 0.5);

}  // namespace advdet
