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
#include <string>
#include <vector>

#include "advdet/core.hpp"
#include "advdet/metrics.hpp"

namespace advdet {

// Shapes scenes: a textured background with a few filled shapes whose class
// is the shape kind. The generator is its own ground truth.

enum class ShapeKind { square = 0, disc = 1, triangle = 2 };

const std::vector<std::string>& synthetic_class_names();

struct SceneOptions {
  int height = 32;
  int width = 32;
  int min_objects = 1;
  int max_objects = 3;
  /// Object side length range, expressed for a 32x32 canvas and scaled with
  /// the smaller image side.
  double min_size = 9.0;
  double max_size = 14.0;
};

struct SyntheticScene {
  ImageBuffer image;
  std::vector<GroundTruthBox> objects;
};

/// Deterministic in (seed, options).
SyntheticScene generate_scene(std::uint64_t seed, const SceneOptions& options = {});

/// Background only, no objects.
ImageBuffer generate_blank(std::uint64_t seed, int height = 32, int width = 32);

/// Seed of the i-th scene of a named batch; keeps batches disjoint.
std::uint64_t scene_seed(std::uint64_t batch_seed, std::uint64_t index);

}  // namespace advdet
