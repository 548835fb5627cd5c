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

#include "advdet/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace advdet {

namespace {

constexpr int kSupersample = 4;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Low-chroma backgrounds: a grey level with a slight tint and a shared
// brightness ramp, so colour alone never looks like an object.
std::vector<double> render_background(std::mt19937_64& rng, int height, int width) {
  const double grey = uniform(rng, 0.30, 0.60);
  std::array<double, 3> tint{};
  for (auto& t : tint) t = uniform(rng, -0.06, 0.06);
  const double slope_x = uniform(rng, -0.15, 0.15);
  const double slope_y = uniform(rng, -0.15, 0.15);
  std::vector<double> px(static_cast<std::size_t>(3) * height * width);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double u = (x + 0.5) / width - 0.5;
        const double v = (y + 0.5) / height - 0.5;
        const double noise = uniform(rng, -0.05, 0.05);
        px[(static_cast<std::size_t>(c) * height + y) * width + x] =
            std::clamp(grey + tint[c] + slope_x * u + slope_y * v + noise, 0.0, 1.0);
      }
    }
  }
  return px;
}

bool inside(ShapeKind kind, double x0, double y0, double s, double px, double py) {
  switch (kind) {
    case ShapeKind::square:
      return px >= x0 && px < x0 + s && py >= y0 && py < y0 + s;
    case ShapeKind::disc: {
      const double dx = px - (x0 + s / 2);
      const double dy = py - (y0 + s / 2);
      return dx * dx + dy * dy <= s * s / 4;
    }
    case ShapeKind::triangle: {
      // Apex at top centre, base along the bottom edge.
      if (py < y0 || py > y0 + s) return false;
      const double half = 0.5 * s * (py - y0) / s;
      const double cx = x0 + s / 2;
      return px >= cx - half && px <= cx + half;
    }
  }
  return false;
}

std::array<double, 3> shape_color(std::mt19937_64& rng, ShapeKind kind) {
  std::array<double, 3> col{};
  const int dominant = static_cast<int>(kind);
  for (int c = 0; c < 3; ++c) {
    col[c] = c == dominant ? uniform(rng, 0.75, 0.95) : uniform(rng, 0.05, 0.30);
  }
  return col;
}

void paint(std::vector<double>& px, int height, int width, ShapeKind kind, double x0, double y0,
           double s, const std::array<double, 3>& color) {
  const int xa = std::max(0, static_cast<int>(std::floor(x0)));
  const int ya = std::max(0, static_cast<int>(std::floor(y0)));
  const int xb = std::min(width, static_cast<int>(std::ceil(x0 + s)));
  const int yb = std::min(height, static_cast<int>(std::ceil(y0 + s)));
  constexpr double kSub = 1.0 / kSupersample;
  for (int y = ya; y < yb; ++y) {
    for (int x = xa; x < xb; ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSupersample; ++sy) {
        for (int sx = 0; sx < kSupersample; ++sx) {
          if (inside(kind, x0, y0, s, x + (sx + 0.5) * kSub, y + (sy + 0.5) * kSub)) ++hits;
        }
      }
      if (hits == 0) continue;
      const double cover = static_cast<double>(hits) / (kSupersample * kSupersample);
      for (int c = 0; c < 3; ++c) {
        double& v = px[(static_cast<std::size_t>(c) * height + y) * width + x];
        v = v * (1.0 - cover) + color[c] * cover;
      }
    }
  }
}

}  // namespace

const std::vector<std::string>& synthetic_class_names() {
  static const std::vector<std::string> names{"square", "disc", "triangle"};
  return names;
}

std::uint64_t scene_seed(std::uint64_t batch_seed, std::uint64_t index) {
  return splitmix64(splitmix64(batch_seed) ^ (index * 0xd1b54a32d192ed03ULL));
}

ImageBuffer generate_blank(std::uint64_t seed, int height, int width) {
  std::mt19937_64 rng(splitmix64(seed));
  return ImageBuffer(height, width, render_background(rng, height, width));
}

SyntheticScene generate_scene(std::uint64_t seed, const SceneOptions& options) {
  if (options.min_objects < 0 || options.max_objects < options.min_objects) {
    throw Error(Errc::invalid_argument, "scene options: bad object count range");
  }
  std::mt19937_64 rng(splitmix64(seed));
  auto px = render_background(rng, options.height, options.width);

  const double scale = std::min(options.height, options.width) / 32.0;
  const int count =
      std::uniform_int_distribution<int>(options.min_objects, options.max_objects)(rng);
  std::vector<GroundTruthBox> objects;
  for (int k = 0; k < count; ++k) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double s = uniform(rng, options.min_size, options.max_size) * scale;
      if (s >= options.width || s >= options.height) break;
      const double x0 = uniform(rng, 0.0, options.width - s);
      const double y0 = uniform(rng, 0.0, options.height - s);
      const BoundingBox box{x0, y0, x0 + s, y0 + s};
      const bool clear = std::none_of(objects.begin(), objects.end(), [&](const GroundTruthBox& o) {
        return box.x_min < o.box.x_max + 1 && o.box.x_min < box.x_max + 1 &&
               box.y_min < o.box.y_max + 1 && o.box.y_min < box.y_max + 1;
      });
      if (!clear) continue;
      const auto kind = static_cast<ShapeKind>(std::uniform_int_distribution<int>(0, 2)(rng));
      paint(px, options.height, options.width, kind, x0, y0, s, shape_color(rng, kind));
      objects.push_back({box, static_cast<int>(kind), false});
      break;
    }
  }
  return {ImageBuffer(options.height, options.width, std::move(px)), std::move(objects)};
}

}  // namespace advdet
