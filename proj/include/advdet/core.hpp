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

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advdet/error.hpp"

namespace advdet {

enum class OutOfRange { reject, clamp };

/// Signed per-pixel field with the shape of an RGB image (planar CHW).
/// Holds perturbations and input gradients; values are unconstrained.
class PixelField {
 public:
  static constexpr int kChannels = 3;

  PixelField(int height, int width, double fill = 0.0);
  PixelField(int height, int width, std::vector<double> values);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const noexcept { return values_.size(); }

  double at(int c, int y, int x) const { return values_[index(c, y, x)]; }
  double& at(int c, int y, int x) { return values_[index(c, y, x)]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

 private:
  std::size_t index(int c, int y, int x) const noexcept {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int height_;
  int width_;
  std::vector<double> values_;
};

/// RGB raster with every value in [0, 1], stored planar (CHW). Immutable once
/// built; operations that perturb an image return a new buffer.
class ImageBuffer {
 public:
  static constexpr int kChannels = 3;

  ImageBuffer(int height, int width, double fill = 0.0);
  ImageBuffer(int height, int width, std::vector<double> pixels,
              OutOfRange policy = OutOfRange::reject);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const noexcept { return pixels_.size(); }

  double at(int c, int y, int x) const {
    return pixels_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }
  std::span<const double> pixels() const noexcept { return pixels_; }
  std::span<const double> channel(int c) const noexcept {
    return std::span<const double>(pixels_).subspan(c * plane_size(), plane_size());
  }

  bool same_shape(const ImageBuffer& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool same_shape(const PixelField& field) const noexcept {
    return height_ == field.height() && width_ == field.width();
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  int height_;
  int width_;
  std::vector<double> pixels_;
};

/// Elementwise b - a, unclamped.
PixelField image_difference(const ImageBuffer& a, const ImageBuffer& b);

/// clamp(image + delta) to [0, 1].
ImageBuffer add_clamped(const ImageBuffer& image, const PixelField& delta);

/// Axis-aligned box in continuous pixel coordinates.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const noexcept { return x_max - x_min; }
  double height() const noexcept { return y_max - y_min; }
  double area() const noexcept { return valid() ? width() * height() : 0.0; }
  bool valid() const noexcept { return x_min < x_max && y_min < y_max; }

  /// Clamps to [0, width] x [0, height]. The result may be invalid if the box
  /// lies entirely outside the image.
  BoundingBox clamped(int image_width, int image_height) const noexcept;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Detection {
  BoundingBox box;
  int class_id = 0;
  double confidence = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Detector output after thresholding and NMS. Every member satisfies
/// confidence >= source_threshold.
class DetectionSet {
 public:
  DetectionSet() = default;
  DetectionSet(std::vector<Detection> detections, double source_threshold);

  const std::vector<Detection>& detections() const noexcept { return detections_; }
  double source_threshold() const noexcept { return threshold_; }
  std::size_t size() const noexcept { return detections_.size(); }
  bool empty() const noexcept { return detections_.empty(); }
  auto begin() const noexcept { return detections_.begin(); }
  auto end() const noexcept { return detections_.end(); }
  const Detection& operator[](std::size_t i) const { return detections_[i]; }

  friend bool operator==(const DetectionSet&, const DetectionSet&) = default;

 private:
  std::vector<Detection> detections_;
  double threshold_ = 0.0;
};

enum class MaskMode { binary, additive };

/// Per-pixel perturbation weights; one plane shared by all channels.
class PerturbationMask {
 public:
  PerturbationMask(int height, int width, std::vector<double> weights, MaskMode mode);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  MaskMode mode() const noexcept { return mode_; }
  double at(int y, int x) const { return weights_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t covered_pixels() const noexcept;

 private:
  int height_;
  int width_;
  std::vector<double> weights_;
  MaskMode mode_;
};

struct LossBreakdown {
  double loc = 0.0;
  double obj = 0.0;
  double cls = 0.0;
  double total = 0.0;

  static LossBreakdown from_parts(double loc, double obj, double cls);
};

enum class GradientNormalization { max_abs, sign, raw };

enum class StopReason { no_detections, distortion_reached, success_rate_reached, max_iterations };

const char* to_string(MaskMode mode) noexcept;
const char* to_string(GradientNormalization norm) noexcept;
const char* to_string(StopReason reason) noexcept;
MaskMode parse_mask_mode(const std::string& text);
GradientNormalization parse_gradient_normalization(const std::string& text);
StopReason parse_stop_reason(const std::string& text);

/// Early-stop controls for the iterative attack. N always applies.
struct StoppingControls {
  std::optional<double> target_distortion;
  std::optional<double> target_success_rate;
  int max_iterations = 500;

  void validate() const;
};

struct AttackConfig {
  double step_size = 0.01;
  int max_iterations = 500;
  std::optional<double> target_distortion;
  std::optional<double> target_success_rate;
  double confidence_threshold = 0.50;
  MaskMode mask_mode = MaskMode::binary;
  GradientNormalization gradient_normalization = GradientNormalization::max_abs;
  /// IoU used by the per-image success measure.
  double iou_match = 0.5;

  StoppingControls controls() const {
    return {target_distortion, target_success_rate, max_iterations};
  }
  void validate() const;
};

struct TraceEntry {
  LossBreakdown loss;
  double distortion = 0.0;
  int detection_count = 0;
  double success = 0.0;
};

struct AttackResult {
  ImageBuffer adversarial_image;
  int iterations_run = 0;
  StopReason stop_reason = StopReason::max_iterations;
  std::vector<TraceEntry> trace;
  DetectionSet initial_detections;
  /// Detections used for the last control check (empty when none ran).
  DetectionSet final_detections;
};

}  // namespace advdet
