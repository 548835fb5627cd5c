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

#include "advdet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace advdet {

namespace {

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double compute_ncc(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) throw Error(Errc::shape, "compute_ncc: dimension mismatch");
  auto pa = a.pixels();
  auto pb = b.pixels();
  if (is_constant(pa) || is_constant(pb)) {
    throw Error(Errc::degenerate_input, "compute_ncc: constant image has zero variance");
  }
  const double ma = mean_of(pa);
  const double mb = mean_of(pb);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double da = pa[i] - ma;
    const double db = pb[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  // sqrt(s * s) == s exactly, so NCC(I, I) is exactly 1.
  const double denom = std::sqrt(saa * sbb);
  if (!(denom > 0.0)) {
    throw Error(Errc::degenerate_input, "compute_ncc: variance underflow");
  }
  return std::clamp(sab / denom, 0.0, 1.0);
}

double distortion(const ImageBuffer& a, const ImageBuffer& b) { return 1.0 - compute_ncc(a, b); }

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.50 + 0.05 * i);
  return t;
}

std::vector<double> voc_iou_thresholds() { return {0.50}; }

double average_precision(const std::vector<bool>& is_tp, std::size_t num_ground_truth) {
  if (num_ground_truth == 0) throw Error(Errc::undefined_metric, "AP needs ground truth");
  const std::size_t n = is_tp.size();
  std::vector<double> precision(n);
  std::vector<double> recall(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_tp[i]) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_ground_truth);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

namespace {

struct RankedPrediction {
  std::size_t image;
  Detection det;
};

// Total order independent of input order: confidence, then image, then box.
bool ranked_before(const RankedPrediction& l, const RankedPrediction& r) {
  if (l.det.confidence != r.det.confidence) return l.det.confidence > r.det.confidence;
  return std::tie(l.image, l.det.box.x_min, l.det.box.y_min, l.det.box.x_max, l.det.box.y_max) <
         std::tie(r.image, r.det.box.x_min, r.det.box.y_min, r.det.box.x_max, r.det.box.y_max);
}

}  // namespace

EvaluationScore compute_map(std::span<const DetectionSet> predictions,
                            std::span<const ImageAnnotation> ground_truth,
                            std::span<const double> iou_thresholds, bool include_difficult) {
  if (predictions.size() != ground_truth.size()) {
    throw Error(Errc::shape, "compute_map: prediction and ground-truth image counts differ");
  }
  if (iou_thresholds.empty()) throw Error(Errc::invalid_argument, "compute_map: no IoU thresholds");

  std::map<int, std::size_t> gt_count;
  for (const auto& img : ground_truth) {
    for (const auto& g : img.boxes) {
      if (include_difficult || !g.difficult) ++gt_count[g.class_id];
    }
  }
  if (gt_count.empty()) throw Error(Errc::undefined_metric, "compute_map: no ground truth");

  EvaluationScore score;
  for (const auto& [cls, num_gt] : gt_count) {
    std::vector<RankedPrediction> ranked;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      for (const auto& d : predictions[i]) {
        if (d.class_id == cls) ranked.push_back({i, d});
      }
    }
    std::sort(ranked.begin(), ranked.end(), ranked_before);

    double ap_sum = 0.0;
    for (double thr : iou_thresholds) {
      std::vector<std::vector<bool>> matched(ground_truth.size());
      for (std::size_t i = 0; i < ground_truth.size(); ++i) {
        matched[i].assign(ground_truth[i].boxes.size(), false);
      }
      std::vector<bool> is_tp;
      is_tp.reserve(ranked.size());
      for (const auto& p : ranked) {
        const auto& gts = ground_truth[p.image].boxes;
        auto best_match = [&](bool want_ignored) {
          int best = -1;
          double best_iou = thr;
          for (std::size_t g = 0; g < gts.size(); ++g) {
            const bool ignored = gts[g].difficult && !include_difficult;
            if (gts[g].class_id != cls || ignored != want_ignored) continue;
            if (!ignored && matched[p.image][g]) continue;
            const double v = iou(p.det.box, gts[g].box);
            if (v >= best_iou && (best < 0 || v > best_iou)) {
              best = static_cast<int>(g);
              best_iou = v;
            }
          }
          return best;
        };
        if (const int g = best_match(false); g >= 0) {
          matched[p.image][static_cast<std::size_t>(g)] = true;
          is_tp.push_back(true);
        } else if (best_match(true) < 0) {
          is_tp.push_back(false);
        }
        // Predictions landing on ignored ground truth are neither TP nor FP.
      }
      ap_sum += average_precision(is_tp, num_gt);
    }
    score.per_class_ap[cls] = ap_sum / static_cast<double>(iou_thresholds.size());
  }
  double total = 0.0;
  for (const auto& [cls, ap] : score.per_class_ap) total += ap;
  score.map_value = total / static_cast<double>(score.per_class_ap.size());
  return score;
}

double success_rate_from_map(double baseline_map, double adversarial_map) {
  if (!(baseline_map > 0.0)) {
    throw Error(Errc::undefined_metric, "success rate needs a positive baseline mAP");
  }
  return 100.0 * (1.0 - adversarial_map / baseline_map);
}

double per_image_success(const DetectionSet& original, const DetectionSet& adversarial,
                         double iou_match) {
  if (original.empty()) {
    throw Error(Errc::not_attackable, "per_image_success: original image has no detections");
  }
  std::size_t suppressed = 0;
  for (const auto& o : original) {
    const bool survives = std::any_of(adversarial.begin(), adversarial.end(), [&](const Detection& a) {
      return a.class_id == o.class_id && iou(a.box, o.box) >= iou_match;
    });
    if (!survives) ++suppressed;
  }
  return static_cast<double>(suppressed) / static_cast<double>(original.size());
}

}  // namespace advdet
