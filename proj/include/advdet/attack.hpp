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

#include <optional>
#include <span>
#include <vector>

#include "advdet/core.hpp"
#include "advdet/detector.hpp"

namespace advdet {

/// Rasterizes boxes onto a zero plane. Coverage is half-open after rounding
/// edges to the nearest integer: [round(x_min), round(x_max)). Additive mode
/// counts covering boxes; binary mode records coverage as 0/1.
PerturbationMask build_mask(std::span<const BoundingBox> boxes, int height, int width,
                            MaskMode mode = MaskMode::binary);

/// clamp(image + step * normalize(gradient) * mask). Pixels with zero mask
/// weight are returned bit-identical. Throws Errc::numeric on non-finite
/// gradient entries.
ImageBuffer masked_ascent_step(const ImageBuffer& image, const PixelField& gradient,
                               const PerturbationMask& mask, double step,
                               GradientNormalization normalization);

/// Iterative masked gradient ascent on the detector's training loss.
///
/// Detections on the clean image are captured once and frozen as loss targets
/// (or `targets` is used when given, e.g. dataset annotations). Each iteration
/// re-detects on the current image, records a trace entry, and stops, returning
/// that same image, if the distortion reaches S, the per-image success reaches
/// R, or nothing is detected any more. Otherwise the mask is rebuilt from the
/// current boxes and one ascent step is applied. After N iterations the last
/// updated image is returned.
AttackResult generate_adversarial(DetectorAdapter& adapter, const ImageBuffer& image,
                                  const AttackConfig& config,
                                  const std::optional<PseudoLabelSet>& targets = std::nullopt);

struct SweepPoint {
  double target_distortion = 0.0;
  /// The clean image had no detections, so success is undefined.
  bool skipped = false;
  double achieved_distortion = 0.0;
  double success = 0.0;
  int iterations = 0;
  StopReason stop_reason = StopReason::no_detections;
};

/// Equivalent to one generate_adversarial run per S (ascending, each in
/// (0, 1]) with success measured by fresh detection on the returned image,
/// but computed from a single run at the largest S.
std::vector<SweepPoint> attack_sweep(DetectorAdapter& adapter, const ImageBuffer& image,
                                     const AttackConfig& base, std::span<const double> distortions);

}  // namespace advdet
