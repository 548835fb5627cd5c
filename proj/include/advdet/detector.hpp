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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "advdet/core.hpp"

namespace advdet {

/// Loss targets for the gradient computation. Built once from the clean
/// image's detections and never modified afterwards.
class PseudoLabelSet {
 public:
  PseudoLabelSet(std::vector<BoundingBox> boxes, std::vector<int> class_ids);

  const std::vector<BoundingBox>& boxes() const noexcept { return boxes_; }
  const std::vector<int>& class_ids() const noexcept { return class_ids_; }
  std::size_t size() const noexcept { return boxes_.size(); }
  bool empty() const noexcept { return boxes_.empty(); }
  bool frozen() const noexcept { return true; }

 private:
  std::vector<BoundingBox> boxes_;
  std::vector<int> class_ids_;
};

/// Copies boxes and classes; confidences are dropped. Throws precondition on
/// an empty set.
PseudoLabelSet make_pseudo_labels(const DetectionSet& detections);

struct GradientResult {
  LossBreakdown loss;
  /// dL_total / d(image) in the original image frame.
  PixelField gradient;
};

struct InputSize {
  int height = 0;
  int width = 0;
};

/// Contract between the attack engine and a concrete detector. Adapters own
/// any resizing and must report boxes and gradients in the frame of the image
/// they were given. Instances are stateful and not thread-safe; use clone()
/// to get one per worker.
class DetectorAdapter {
 public:
  virtual ~DetectorAdapter() = default;

  virtual std::string name() const = 0;
  virtual const std::vector<std::string>& class_vocabulary() const = 0;
  /// nullopt means any input size is accepted as-is.
  virtual std::optional<InputSize> native_input_size() const = 0;

  virtual DetectionSet detect(const ImageBuffer& image, double threshold) = 0;
  virtual GradientResult loss_and_input_gradient(const ImageBuffer& image,
                                                 const PseudoLabelSet& targets) = 0;

  /// Both results for one image. Adapters that can share a forward pass
  /// should override this.
  virtual std::pair<DetectionSet, GradientResult> detect_and_gradient(
      const ImageBuffer& image, double threshold, const PseudoLabelSet& targets) {
    auto dets = detect(image, threshold);
    return {std::move(dets), loss_and_input_gradient(image, targets)};
  }

  virtual std::unique_ptr<DetectorAdapter> clone() const = 0;
};

// Checked entry points. They validate arguments, verify the adapter honored
// its contract, and rethrow backend failures as Errc::backend tagged with the
// adapter name.
DetectionSet detect(DetectorAdapter& adapter, const ImageBuffer& image, double threshold);
GradientResult loss_and_input_gradient(DetectorAdapter& adapter, const ImageBuffer& image,
                                       const PseudoLabelSet& targets);
std::pair<DetectionSet, GradientResult> detect_and_gradient(DetectorAdapter& adapter,
                                                            const ImageBuffer& image,
                                                            double threshold,
                                                            const PseudoLabelSet& targets);

/// Greedy per-class non-maximum suppression; keeps input order among equals.
std::vector<Detection> non_max_suppression(std::vector<Detection> candidates, double iou_limit);

struct AdapterOptions {
  std::uint64_t seed = 0;
  /// Where weight files live. Empty means default_model_dir().
  std::filesystem::path model_dir;
};

using AdapterFactory = std::function<std::unique_ptr<DetectorAdapter>(const AdapterOptions&)>;

/// $ADVDET_MODEL_DIR if set, otherwise empty (no on-disk weight cache).
std::filesystem::path default_model_dir();

/// Registered adapter names, sorted.
std::vector<std::string> available_detectors();

/// Throws Errc::configuration listing the registered names when `name` is
/// unknown.
std::unique_ptr<DetectorAdapter> create_detector(const std::string& name,
                                                 const AdapterOptions& options = {});

/// Adds or replaces a registry entry.
void register_detector(const std::string& name, AdapterFactory factory);

}  // namespace advdet
