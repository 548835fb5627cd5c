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
#include <memory>

#include "advdet/detector.hpp"
#include "advdet/synthetic.hpp"

namespace advdet {

enum class ToyCapacity { small, large };

struct ToyBuildOptions {
  ToyCapacity capacity = ToyCapacity::small;
  /// Directory for cached weights; empty falls back to default_model_dir().
  /// No disk cache is used when both are empty.
  std::filesystem::path model_dir;
  /// When false, always trains from scratch and caches nothing.
  bool use_cache = true;
  /// Recall required on the validation scenes before training stops.
  double target_recall = 0.95;
  int max_steps = 8000;
};

/// Builds the shapes detector: a three-layer convolutional grid detector
/// (stride 4, one anchor per cell, objectness + box + 3-way class head) for
/// 32x32 inputs. Weights are initialized from `seed` and trained on generated
/// scenes until the validation recall target is met, so the same seed always
/// yields the same weights. Other input sizes are resized bilinearly, with
/// boxes and gradients mapped back to the caller's frame. Throws Errc::backend
/// if training does not converge within the step budget. Trained weights are
/// shared across calls in-process and cached on disk (see ToyBuildOptions).
std::unique_ptr<DetectorAdapter> toy_detector_build(std::uint64_t seed,
                                                    const ToyBuildOptions& options = {});

/// Scenes used by the detector's own held-out check; never used in training
/// or in the early-stopping validation.
std::uint64_t toy_holdout_batch_seed();

/// Fraction of ground-truth objects matched by a same-class detection with
/// IoU >= 0.5 at the given threshold.
double detection_recall(DetectorAdapter& adapter, std::uint64_t batch_seed, int scene_count,
                        double threshold = 0.5, const SceneOptions& options = {});

/// True when two adapters are toy detectors with bit-identical weights.
bool toy_weights_equal(const DetectorAdapter& a, const DetectorAdapter& b);

}  // namespace advdet
