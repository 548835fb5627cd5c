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

#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "advdet/detector.hpp"
#include "advdet/error.hpp"
#include "advdet/toy_detector.hpp"

#define EXPECT_THROW_CODE(stmt, errc)                                        \
  do {                                                                       \
    try {                                                                    \
      stmt;                                                                  \
      ADD_FAILURE() << "expected advdet::Error from " #stmt;                 \
    } catch (const ::advdet::Error& e_) {                                    \
      EXPECT_EQ(e_.code(), errc) << e_.what();                               \
    }                                                                        \
  } while (0)

namespace advdet::test {

inline ImageBuffer random_image(std::uint64_t seed, int height, int width) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> px(3 * static_cast<std::size_t>(height) * width);
  for (auto& v : px) v = u(rng);
  return ImageBuffer(height, width, std::move(px));
}

/// Same plane in all three channels, row-major.
inline ImageBuffer gray_image(int height, int width, const std::vector<double>& plane) {
  std::vector<double> px;
  for (int c = 0; c < 3; ++c) px.insert(px.end(), plane.begin(), plane.end());
  return ImageBuffer(height, width, std::move(px));
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("advdet-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Constant output regardless of the image: fixed detections, zero loss
/// gradient.
class FrozenAdapter : public DetectorAdapter {
 public:
  explicit FrozenAdapter(std::vector<Detection> dets) : dets_(std::move(dets)) {}

  std::string name() const override { return "frozen"; }
  const std::vector<std::string>& class_vocabulary() const override { return vocab_; }
  std::optional<InputSize> native_input_size() const override { return std::nullopt; }
  DetectionSet detect(const ImageBuffer&, double threshold) override {
    std::vector<Detection> kept;
    for (const auto& d : dets_) {
      if (d.confidence >= threshold) kept.push_back(d);
    }
    return DetectionSet(std::move(kept), threshold);
  }
  GradientResult loss_and_input_gradient(const ImageBuffer& image, const PseudoLabelSet&) override {
    return {LossBreakdown::from_parts(1.0, 1.0, 1.0), PixelField(image.height(), image.width())};
  }
  std::unique_ptr<DetectorAdapter> clone() const override {
    return std::make_unique<FrozenAdapter>(dets_);
  }

 private:
  std::vector<Detection> dets_;
  std::vector<std::string> vocab_{"square", "disc", "triangle"};
};

/// Analytic stand-in detector. Each fixed box is reported with confidence
/// 1 - mean(pixels inside the box) and the loss is the sum of pixels inside
/// the pseudo-label boxes, so ascent brightens boxes until they vanish.
class BrightnessAdapter : public DetectorAdapter {
 public:
  explicit BrightnessAdapter(std::vector<BoundingBox> boxes) : boxes_(std::move(boxes)) {}

  std::string name() const override { return "brightness"; }
  const std::vector<std::string>& class_vocabulary() const override { return vocab_; }
  std::optional<InputSize> native_input_size() const override { return std::nullopt; }

  DetectionSet detect(const ImageBuffer& image, double threshold) override {
    std::vector<Detection> kept;
    for (const auto& b : boxes_) {
      const double conf = 1.0 - mean_in(image, b);
      if (conf >= threshold) kept.push_back({b, 0, conf});
    }
    return DetectionSet(std::move(kept), threshold);
  }

  GradientResult loss_and_input_gradient(const ImageBuffer& image,
                                         const PseudoLabelSet& targets) override {
    PixelField g(image.height(), image.width());
    double loss = 0.0;
    for (const auto& b : targets.boxes()) {
      for (int c = 0; c < 3; ++c) {
        for (int y = static_cast<int>(b.y_min); y < static_cast<int>(b.y_max); ++y) {
          for (int x = static_cast<int>(b.x_min); x < static_cast<int>(b.x_max); ++x) {
            loss += image.at(c, y, x);
            g.at(c, y, x) += 1.0;
          }
        }
      }
    }
    return {LossBreakdown::from_parts(0.0, loss, 0.0), std::move(g)};
  }

  std::unique_ptr<DetectorAdapter> clone() const override {
    return std::make_unique<BrightnessAdapter>(boxes_);
  }

 private:
  static double mean_in(const ImageBuffer& image, const BoundingBox& b) {
    double sum = 0.0;
    int n = 0;
    for (int c = 0; c < 3; ++c) {
      for (int y = static_cast<int>(b.y_min); y < static_cast<int>(b.y_max); ++y) {
        for (int x = static_cast<int>(b.x_min); x < static_cast<int>(b.x_max); ++x) {
          sum += image.at(c, y, x);
          ++n;
        }
      }
    }
    return sum / n;
  }

  std::vector<BoundingBox> boxes_;
  std::vector<std::string> vocab_{"square", "disc", "triangle"};
};

/// The seed-1 toy detector, trained once per process (weights are cached on
/// disk when ADVDET_MODEL_DIR is set).
inline std::unique_ptr<DetectorAdapter> toy(std::uint64_t seed = 1,
                                            ToyCapacity capacity = ToyCapacity::small) {
  ToyBuildOptions options;
  options.capacity = capacity;
  return toy_detector_build(seed, options);
}

}  // namespace advdet::test
