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

#include "advdet/attack.hpp"

#include <algorithm>
#include <cmath>

#include "advdet/metrics.hpp"

namespace advdet {

PerturbationMask build_mask(std::span<const BoundingBox> boxes, int height, int width,
                            MaskMode mode) {
  std::vector<double> weights(static_cast<std::size_t>(height) * width, 0.0);
  for (const auto& raw : boxes) {
    const auto b = raw.clamped(width, height);
    const int x0 = static_cast<int>(std::round(b.x_min));
    const int x1 = static_cast<int>(std::round(b.x_max));
    const int y0 = static_cast<int>(std::round(b.y_min));
    const int y1 = static_cast<int>(std::round(b.y_max));
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        double& w = weights[static_cast<std::size_t>(y) * width + x];
        w = mode == MaskMode::binary ? 1.0 : w + 1.0;
      }
    }
  }
  return PerturbationMask(height, width, std::move(weights), mode);
}

ImageBuffer masked_ascent_step(const ImageBuffer& image, const PixelField& gradient,
                               const PerturbationMask& mask, double step,
                               GradientNormalization normalization) {
  if (!image.same_shape(gradient) || mask.height() != image.height() ||
      mask.width() != image.width()) {
    throw Error(Errc::shape, "masked_ascent_step: image, gradient and mask shapes differ");
  }
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw Error(Errc::invalid_argument, "masked_ascent_step: step size must be positive");
  }
  double max_abs = 0.0;
  for (double g : gradient.values()) {
    if (!std::isfinite(g)) throw Error(Errc::numeric, "masked_ascent_step: non-finite gradient");
    max_abs = std::max(max_abs, std::abs(g));
  }
  const double scale =
      normalization == GradientNormalization::max_abs && max_abs > 0.0 ? 1.0 / max_abs : 1.0;

  std::vector<double> out(image.pixels().begin(), image.pixels().end());
  const auto g = gradient.values();
  const std::size_t plane = image.plane_size();
  for (int c = 0; c < ImageBuffer::kChannels; ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      const double w = mask.weights()[p];
      if (w == 0.0) continue;
      const std::size_t i = c * plane + p;
      double dir = g[i];
      switch (normalization) {
        case GradientNormalization::max_abs: dir *= scale; break;
        case GradientNormalization::sign: dir = (dir > 0.0) - (dir < 0.0); break;
        case GradientNormalization::raw: break;
      }
      if (dir == 0.0) continue;
      out[i] = std::clamp(out[i] + step * dir * w, 0.0, 1.0);
    }
  }
  return ImageBuffer(image.height(), image.width(), std::move(out));
}

AttackResult generate_adversarial(DetectorAdapter& adapter, const ImageBuffer& image,
                                  const AttackConfig& config,
                                  const std::optional<PseudoLabelSet>& targets) {
  config.validate();
  const double threshold = config.confidence_threshold;
  auto initial = detect(adapter, image, threshold);
  if (initial.empty()) {
    return AttackResult{image, 0, StopReason::no_detections, {}, initial, initial};
  }
  const PseudoLabelSet frozen = targets ? *targets : make_pseudo_labels(initial);

  AttackResult result{image, 0, StopReason::max_iterations, {}, initial, {}};
  result.trace.reserve(static_cast<std::size_t>(config.max_iterations));
  ImageBuffer current = image;
  std::vector<BoundingBox> boxes;

  for (int i = 0; i < config.max_iterations; ++i) {
    auto [dets, grad] = detect_and_gradient(adapter, current, threshold, frozen);
    const double d = distortion(image, current);
    if (std::isnan(d)) throw Error(Errc::numeric, "distortion became NaN");
    const double success = per_image_success(initial, dets, config.iou_match);
    result.trace.push_back({grad.loss, d, static_cast<int>(dets.size()), success});
    result.iterations_run = i + 1;

    std::optional<StopReason> stop;
    if (config.target_distortion && d >= *config.target_distortion) {
      stop = StopReason::distortion_reached;
    } else if (config.target_success_rate && success >= *config.target_success_rate) {
      stop = StopReason::success_rate_reached;
    } else if (dets.empty()) {
      stop = StopReason::no_detections;
    }
    result.final_detections = std::move(dets);
    if (stop) {
      result.stop_reason = *stop;
      result.adversarial_image = std::move(current);
      return result;
    }

    boxes.clear();
    for (const auto& det : result.final_detections) boxes.push_back(det.box);
    const auto mask = build_mask(boxes, current.height(), current.width(), config.mask_mode);
    current = masked_ascent_step(current, grad.gradient, mask, config.step_size,
                                 config.gradient_normalization);
  }
  result.stop_reason = StopReason::max_iterations;
  result.adversarial_image = std::move(current);
  return result;
}

std::vector<SweepPoint> attack_sweep(DetectorAdapter& adapter, const ImageBuffer& image,
                                     const AttackConfig& base, std::span<const double> distortions) {
  for (std::size_t i = 0; i < distortions.size(); ++i) {
    if (!(distortions[i] > 0.0 && distortions[i] <= 1.0)) {
      throw Error(Errc::invalid_argument, "attack_sweep: S values must lie in (0, 1]");
    }
    if (i > 0 && distortions[i] < distortions[i - 1]) {
      throw Error(Errc::invalid_argument, "attack_sweep: S values must be ascending");
    }
  }
  std::vector<SweepPoint> points;
  if (distortions.empty()) return points;
  // A run with a smaller S is a prefix of the run with the largest S, so one
  // trajectory gives every point.
  AttackConfig config = base;
  config.target_distortion = distortions.back();
  const auto result = generate_adversarial(adapter, image, config);
  const auto& trace = result.trace;
  std::optional<double> tail_success;
  for (double s : distortions) {
    SweepPoint p;
    p.target_distortion = s;
    if (result.initial_detections.empty()) {
      p.skipped = true;
      points.push_back(p);
      continue;
    }
    std::size_t k = 0;
    for (; k < trace.size(); ++k) {
      const auto& t = trace[k];
      if (t.distortion >= s) {
        p.stop_reason = StopReason::distortion_reached;
      } else if (base.target_success_rate && t.success >= *base.target_success_rate) {
        p.stop_reason = StopReason::success_rate_reached;
      } else if (t.detection_count == 0) {
        p.stop_reason = StopReason::no_detections;
      } else {
        continue;
      }
      break;
    }
    if (k < trace.size()) {
      p.iterations = static_cast<int>(k + 1);
      p.achieved_distortion = trace[k].distortion;
      p.success = trace[k].success;
    } else {
      // Ran out of iterations: the point is the final stepped image.
      p.iterations = result.iterations_run;
      p.stop_reason = StopReason::max_iterations;
      p.achieved_distortion = distortion(image, result.adversarial_image);
      if (!tail_success) {
        const auto after = detect(adapter, result.adversarial_image, base.confidence_threshold);
        tail_success = per_image_success(result.initial_detections, after, base.iou_match);
      }
      p.success = *tail_success;
    }
    points.push_back(p);
  }
  return points;
}

}  // namespace advdet
