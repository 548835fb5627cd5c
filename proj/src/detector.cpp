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

#include "advdet/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <sstream>

#include "advdet/metrics.hpp"
#include "advdet/toy_detector.hpp"

namespace advdet {

PseudoLabelSet::PseudoLabelSet(std::vector<BoundingBox> boxes, std::vector<int> class_ids)
    : boxes_(std::move(boxes)), class_ids_(std::move(class_ids)) {
  if (boxes_.size() != class_ids_.size()) {
    throw Error(Errc::invalid_argument, "pseudo labels: box and class counts differ");
  }
}

PseudoLabelSet make_pseudo_labels(const DetectionSet& detections) {
  if (detections.empty()) {
    throw Error(Errc::precondition, "make_pseudo_labels: no detections to freeze");
  }
  std::vector<BoundingBox> boxes;
  std::vector<int> classes;
  for (const auto& d : detections) {
    boxes.push_back(d.box);
    classes.push_back(d.class_id);
  }
  return PseudoLabelSet(std::move(boxes), std::move(classes));
}

std::vector<Detection> non_max_suppression(std::vector<Detection> candidates, double iou_limit) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
  std::vector<Detection> kept;
  for (const auto& c : candidates) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.class_id == c.class_id && iou(k.box, c.box) > iou_limit;
    });
    if (!suppressed) kept.push_back(c);
  }
  return kept;
}

namespace {

void check_threshold(double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(Errc::invalid_argument, "confidence threshold must lie in [0, 1]");
  }
}

[[noreturn]] void rethrow_as_backend(const DetectorAdapter& adapter) {
  try {
    throw;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(Errc::backend, "detector '" + adapter.name() + "' failed: " + e.what());
  }
}

void check_detections(const DetectorAdapter& adapter, const DetectionSet& dets,
                      const ImageBuffer& image, double threshold) {
  const auto vocab = static_cast<int>(adapter.class_vocabulary().size());
  for (const auto& d : dets) {
    if (d.confidence < threshold || d.class_id >= vocab || d.box.x_max > image.width() ||
        d.box.y_max > image.height() || d.box.x_min < 0.0 || d.box.y_min < 0.0) {
      throw Error(Errc::backend, "detector '" + adapter.name() + "' broke the detection contract");
    }
  }
}

void check_gradient(const DetectorAdapter& adapter, const GradientResult& g, const ImageBuffer& image) {
  if (!image.same_shape(g.gradient)) {
    throw Error(Errc::backend, "detector '" + adapter.name() + "' returned a gradient of the wrong shape");
  }
  for (double v : g.gradient.values()) {
    if (!std::isfinite(v)) {
      throw Error(Errc::numeric, "detector '" + adapter.name() + "' returned a non-finite gradient");
    }
  }
}

}  // namespace

DetectionSet detect(DetectorAdapter& adapter, const ImageBuffer& image, double threshold) {
  check_threshold(threshold);
  try {
    auto dets = adapter.detect(image, threshold);
    check_detections(adapter, dets, image, threshold);
    return dets;
  } catch (...) {
    rethrow_as_backend(adapter);
  }
}

GradientResult loss_and_input_gradient(DetectorAdapter& adapter, const ImageBuffer& image,
                                       const PseudoLabelSet& targets) {
  if (targets.empty()) throw Error(Errc::precondition, "loss_and_input_gradient: empty targets");
  try {
    auto g = adapter.loss_and_input_gradient(image, targets);
    check_gradient(adapter, g, image);
    return g;
  } catch (...) {
    rethrow_as_backend(adapter);
  }
}

std::pair<DetectionSet, GradientResult> detect_and_gradient(DetectorAdapter& adapter,
                                                            const ImageBuffer& image,
                                                            double threshold,
                                                            const PseudoLabelSet& targets) {
  check_threshold(threshold);
  if (targets.empty()) throw Error(Errc::precondition, "detect_and_gradient: empty targets");
  try {
    auto result = adapter.detect_and_gradient(image, threshold, targets);
    check_detections(adapter, result.first, image, threshold);
    check_gradient(adapter, result.second, image);
    return result;
  } catch (...) {
    rethrow_as_backend(adapter);
  }
}

// --- registry ---------------------------------------------------------------

namespace {

struct Registry {
  std::mutex mutex;
  std::map<std::string, AdapterFactory> factories;
};

// Pretrained detectors known by name. This build carries no inference backend
// for them; they stay listed so configs naming them fail with a clear cause.
const char* const kExternalDetectors[] = {"yolov8n", "yolov8s", "yolov8m", "yolov8l", "yolov8x",
                                          "faster-rcnn", "retinanet", "swin-t"};

std::filesystem::path resolve_model_dir(const AdapterOptions& options) {
  return options.model_dir.empty() ? default_model_dir() : options.model_dir;
}

Registry& registry() {
  static Registry r;
  static std::once_flag once;
  std::call_once(once, [] {
    Registry& reg = r;
    reg.factories["toy"] = [](const AdapterOptions& o) {
      ToyBuildOptions b;
      b.model_dir = resolve_model_dir(o);
      return toy_detector_build(o.seed, b);
    };
    reg.factories["toy-large"] = [](const AdapterOptions& o) {
      ToyBuildOptions b;
      b.capacity = ToyCapacity::large;
      b.model_dir = resolve_model_dir(o);
      return toy_detector_build(o.seed, b);
    };
    for (const char* name : kExternalDetectors) {
      reg.factories[name] = [n = std::string(name)](const AdapterOptions& o)
          -> std::unique_ptr<DetectorAdapter> {
        const auto dir = resolve_model_dir(o);
        throw Error(Errc::backend,
                    "detector '" + n + "' needs a pretrained-model inference backend, which this "
                    "build does not include (model directory: '" +
                        (dir.empty() ? std::string("<unset>") : dir.string()) +
                        "'); register one with register_detector()");
      };
    }
  });
  return r;
}

}  // namespace

std::filesystem::path default_model_dir() {
  if (const char* env = std::getenv("ADVDET_MODEL_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return {};
}

std::vector<std::string> available_detectors() {
  auto& reg = registry();
  std::lock_guard<std::mutex> lock(reg.mutex);
  std::vector<std::string> names;
  for (const auto& [name, f] : reg.factories) names.push_back(name);
  return names;
}

std::unique_ptr<DetectorAdapter> create_detector(const std::string& name,
                                                 const AdapterOptions& options) {
  AdapterFactory factory;
  {
    auto& reg = registry();
    std::lock_guard<std::mutex> lock(reg.mutex);
    if (auto it = reg.factories.find(name); it != reg.factories.end()) factory = it->second;
  }
  if (!factory) {
    std::ostringstream os;
    os << "unknown detector '" << name << "'; available:";
    for (const auto& n : available_detectors()) os << ' ' << n;
    throw Error(Errc::configuration, os.str());
  }
  return factory(options);
}

void register_detector(const std::string& name, AdapterFactory factory) {
  auto& reg = registry();
  std::lock_guard<std::mutex> lock(reg.mutex);
  reg.factories[name] = std::move(factory);
}

}  // namespace advdet
