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

#include <string>
#include <vector>

#include "advdet/metrics.hpp"

namespace advdet::test {

// Small detection problems with AP worked out by hand from the ranked
// TP/FP list (all-point interpolation).
struct MapFixture {
  std::string name;
  std::vector<DetectionSet> predictions;
  std::vector<ImageAnnotation> ground_truth;
  std::vector<double> iou_thresholds;
  double expected_map;
};

inline ImageAnnotation annotate(const std::string& id, std::vector<GroundTruthBox> boxes) {
  return {id, 100, 100, std::move(boxes)};
}

inline std::vector<MapFixture> map_fixtures() {
  const BoundingBox a{0, 0, 10, 10};
  const BoundingBox b{20, 20, 30, 30};
  const BoundingBox far{50, 50, 60, 60};
  std::vector<MapFixture> f;

  // Exact copies at confidence 1: every prediction is a TP, AP 1.
  f.push_back({"perfect",
               {DetectionSet({{a, 0, 1.0}, {b, 1, 1.0}}, 0.5)},
               {annotate("1", {{a, 0, false}, {b, 1, false}})},
               {0.5},
               1.0});

  // Ranked TP (0.9), FP (0.8); 2 GT. Recall 0.5 at precision 1, no more
  // recall afterwards: AP = 0.5.
  f.push_back({"one_hit_one_miss",
               {DetectionSet({{a, 0, 0.9}, {far, 0, 0.8}}, 0.5)},
               {annotate("1", {{a, 0, false}, {b, 0, false}})},
               {0.5},
               0.5});

  // Ranked FP (0.9), TP (0.8); 2 GT. Recall 0.5 reached at precision 1/2:
  // AP = 0.5 * 0.5 = 0.25.
  f.push_back({"miss_ranked_first",
               {DetectionSet({{far, 0, 0.9}, {a, 0, 0.8}}, 0.5)},
               {annotate("1", {{a, 0, false}, {b, 0, false}})},
               {0.5},
               0.25});

  // Two images. Ranked: TP (img1, 0.9), duplicate FP (img1, 0.88), TP (img2,
  // 0.85). Precision 1, 1/2, 2/3 at recall 1/2, 1/2, 1. Envelope: 1 up to
  // recall 1/2, then 2/3. AP = 0.5 * 1 + 0.5 * 2/3 = 5/6.
  f.push_back({"duplicate_across_images",
               {DetectionSet({{a, 0, 0.9}, {BoundingBox{0, 0, 10, 9}, 0, 0.88}}, 0.5),
                DetectionSet({{b, 0, 0.85}}, 0.5)},
               {annotate("1", {{a, 0, false}}), annotate("2", {{b, 0, false}})},
               {0.5},
               5.0 / 6.0});

  // Class 0 perfect (AP 1). Class 1: FP (0.95) then TP (0.6) on its single
  // GT, so recall 1 at precision 1/2 (AP 0.5). mAP = (1 + 0.5) / 2 = 0.75.
  f.push_back({"two_classes",
               {DetectionSet({{a, 0, 0.99}, {far, 1, 0.95}, {b, 1, 0.6}}, 0.5)},
               {annotate("1", {{a, 0, false}, {b, 1, false}})},
               {0.5},
               0.75});

  // One GT, one prediction with IoU 0.62 (box 10 x 6.2 inside 10 x 10).
  // TP at thresholds 0.50, 0.55, 0.60; FP at the other seven. AP per
  // threshold is 1 or 0, so the mean is 3/10.
  f.push_back({"coco_thresholds",
               {DetectionSet({{BoundingBox{0, 0, 10, 6.2}, 0, 0.9}}, 0.5)},
               {annotate("1", {{a, 0, false}})},
               coco_iou_thresholds(),
               0.3});

  // A prediction on a difficult box is ignored rather than counted as FP;
  // the remaining TP covers the only counted GT. AP = 1.
  f.push_back({"difficult_ignored",
               {DetectionSet({{b, 0, 0.9}, {a, 0, 0.8}}, 0.5)},
               {annotate("1", {{a, 0, false}, {b, 0, true}})},
               {0.5},
               1.0});
  return f;
}

}  // namespace advdet::test
