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

#include "advdet/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace advdet {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::shape: return "shape mismatch";
    case Errc::degenerate_input: return "degenerate input";
    case Errc::undefined_metric: return "undefined metric";
    case Errc::not_attackable: return "not attackable";
    case Errc::numeric: return "numeric error";
    case Errc::backend: return "backend error";
    case Errc::capability: return "capability error";
    case Errc::precondition: return "precondition violated";
    case Errc::configuration: return "configuration error";
    case Errc::io: return "i/o error";
    case Errc::parse: return "parse error";
  }
  return "unknown error";
}

namespace {

void check_dims(int height, int width) {
  if (height < 1 || width < 1) {
    std::ostringstream os;
    os << "image dimensions must be positive, got " << height << "x" << width;
    throw Error(Errc::shape, os.str());
  }
}

}  // namespace

PixelField::PixelField(int height, int width, double fill) : height_(height), width_(width) {
  check_dims(height, width);
  values_.assign(static_cast<std::size_t>(kChannels) * height * width, fill);
}

PixelField::PixelField(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  check_dims(height, width);
  if (values_.size() != static_cast<std::size_t>(kChannels) * height * width) {
    throw Error(Errc::shape, "field value count does not match 3 x height x width");
  }
}

ImageBuffer::ImageBuffer(int height, int width, double fill) : height_(height), width_(width) {
  check_dims(height, width);
  if (!(fill >= 0.0 && fill <= 1.0)) {
    throw Error(Errc::invalid_argument, "fill value outside [0, 1]");
  }
  pixels_.assign(static_cast<std::size_t>(kChannels) * height * width, fill);
}

ImageBuffer::ImageBuffer(int height, int width, std::vector<double> pixels, OutOfRange policy)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  check_dims(height, width);
  if (pixels_.size() != static_cast<std::size_t>(kChannels) * height * width) {
    throw Error(Errc::shape, "pixel count does not match 3 x height x width");
  }
  for (std::size_t i = 0; i < pixels_.size(); ++i) {
    double& v = pixels_[i];
    if (v >= 0.0 && v <= 1.0) continue;
    if (std::isnan(v)) {
      throw Error(Errc::numeric, "pixel value is NaN at index " + std::to_string(i));
    }
    if (policy == OutOfRange::reject) {
      std::ostringstream os;
      os << "pixel value " << v << " outside [0, 1] at index " << i;
      throw Error(Errc::invalid_argument, os.str());
    }
    v = std::clamp(v, 0.0, 1.0);
  }
}

PixelField image_difference(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) throw Error(Errc::shape, "image_difference: dimension mismatch");
  std::vector<double> diff(a.size());
  auto pa = a.pixels();
  auto pb = b.pixels();
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = pb[i] - pa[i];
  return PixelField(a.height(), a.width(), std::move(diff));
}

ImageBuffer add_clamped(const ImageBuffer& image, const PixelField& delta) {
  if (!image.same_shape(delta)) throw Error(Errc::shape, "add_clamped: dimension mismatch");
  std::vector<double> out(image.pixels().begin(), image.pixels().end());
  auto d = delta.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
  return ImageBuffer(image.height(), image.width(), std::move(out), OutOfRange::clamp);
}

BoundingBox BoundingBox::clamped(int image_width, int image_height) const noexcept {
  const auto w = static_cast<double>(image_width);
  const auto h = static_cast<double>(image_height);
  return {std::clamp(x_min, 0.0, w), std::clamp(y_min, 0.0, h), std::clamp(x_max, 0.0, w),
          std::clamp(y_max, 0.0, h)};
}

DetectionSet::DetectionSet(std::vector<Detection> detections, double source_threshold)
    : detections_(std::move(detections)), threshold_(source_threshold) {
  if (!(threshold_ >= 0.0 && threshold_ <= 1.0)) {
    throw Error(Errc::invalid_argument, "confidence threshold outside [0, 1]");
  }
  for (const auto& d : detections_) {
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
      throw Error(Errc::invalid_argument, "detection confidence outside [0, 1]");
    }
    if (d.confidence < threshold_) {
      throw Error(Errc::invalid_argument, "detection confidence below the set's threshold");
    }
    if (!d.box.valid()) throw Error(Errc::invalid_argument, "detection has a degenerate box");
    if (d.class_id < 0) throw Error(Errc::invalid_argument, "negative class id");
  }
}

PerturbationMask::PerturbationMask(int height, int width, std::vector<double> weights,
                                   MaskMode mode)
    : height_(height), width_(width), weights_(std::move(weights)), mode_(mode) {
  check_dims(height, width);
  if (weights_.size() != static_cast<std::size_t>(height) * width) {
    throw Error(Errc::shape, "mask weight count does not match height x width");
  }
  for (double w : weights_) {
    if (!(w >= 0.0)) throw Error(Errc::invalid_argument, "mask weights must be non-negative");
    if (mode == MaskMode::binary && w != 0.0 && w != 1.0) {
      throw Error(Errc::invalid_argument, "binary mask weights must be 0 or 1");
    }
  }
}

std::size_t PerturbationMask::covered_pixels() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(weights_.begin(), weights_.end(), [](double w) { return w != 0.0; }));
}

LossBreakdown LossBreakdown::from_parts(double loc, double obj, double cls) {
  return {loc, obj, cls, loc + obj + cls};
}

const char* to_string(MaskMode mode) noexcept {
  return mode == MaskMode::binary ? "binary" : "additive";
}

const char* to_string(GradientNormalization norm) noexcept {
  switch (norm) {
    case GradientNormalization::max_abs: return "max-abs";
    case GradientNormalization::sign: return "sign";
    case GradientNormalization::raw: return "raw";
  }
  return "?";
}

const char* to_string(StopReason reason) noexcept {
  switch (reason) {
    case StopReason::no_detections: return "no_detections";
    case StopReason::distortion_reached: return "distortion_reached";
    case StopReason::success_rate_reached: return "success_rate_reached";
    case StopReason::max_iterations: return "max_iterations";
  }
  return "?";
}

MaskMode parse_mask_mode(const std::string& text) {
  if (text == "binary") return MaskMode::binary;
  if (text == "additive") return MaskMode::additive;
  throw Error(Errc::configuration, "unknown mask mode '" + text + "' (binary, additive)");
}

GradientNormalization parse_gradient_normalization(const std::string& text) {
  if (text == "max-abs") return GradientNormalization::max_abs;
  if (text == "sign") return GradientNormalization::sign;
  if (text == "raw") return GradientNormalization::raw;
  throw Error(Errc::configuration,
              "unknown gradient normalization '" + text + "' (max-abs, sign, raw)");
}

StopReason parse_stop_reason(const std::string& text) {
  for (auto r : {StopReason::no_detections, StopReason::distortion_reached,
                 StopReason::success_rate_reached, StopReason::max_iterations}) {
    if (text == to_string(r)) return r;
  }
  throw Error(Errc::parse, "unknown stop reason '" + text + "'");
}

namespace {

void check_unit(const std::optional<double>& v, const char* name) {
  if (v && !(*v >= 0.0 && *v <= 1.0)) {
    throw Error(Errc::configuration, std::string(name) + " must lie in [0, 1]");
  }
}

}  // namespace

void StoppingControls::validate() const {
  check_unit(target_distortion, "target distortion");
  check_unit(target_success_rate, "target success rate");
  if (max_iterations < 1) throw Error(Errc::configuration, "max iterations must be positive");
}

void AttackConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw Error(Errc::configuration, "step size must be a positive finite number");
  }
  controls().validate();
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
    throw Error(Errc::configuration, "confidence threshold must lie in [0, 1]");
  }
  if (!(iou_match > 0.0 && iou_match <= 1.0)) {
    throw Error(Errc::configuration, "IoU match threshold must lie in (0, 1]");
  }
}

}  // namespace advdet
