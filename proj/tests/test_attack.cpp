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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "advdet/attack.hpp"
#include "advdet/metrics.hpp"
#include "advdet/synthetic.hpp"
#include "test_util.hpp"

namespace advdet {
namespace {

// Straightforward rasterization used as the oracle for build_mask.
std::vector<double> rasterize(const std::vector<BoundingBox>& boxes, int h, int w, MaskMode mode) {
  std::vector<double> out(static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int n = 0;
      for (const auto& b : boxes) {
        const double x0 = std::round(std::clamp(b.x_min, 0.0, double(w)));
        const double x1 = std::round(std::clamp(b.x_max, 0.0, double(w)));
        const double y0 = std::round(std::clamp(b.y_min, 0.0, double(h)));
        const double y1 = std::round(std::clamp(b.y_max, 0.0, double(h)));
        if (x >= x0 && x < x1 && y >= y0 && y < y1) ++n;
      }
      out[static_cast<std::size_t>(y) * w + x] = mode == MaskMode::binary ? (n > 0) : n;
    }
  }
  return out;
}

TEST(BuildMask, EmptyListIsZero) {
  const auto m = build_mask({}, 4, 4);
  EXPECT_EQ(m.covered_pixels(), 0u);
  for (double v : m.weights()) EXPECT_EQ(v, 0.0);
}

TEST(BuildMask, FullImageBoxIsAllOnes) {
  const std::vector<BoundingBox> boxes{{0, 0, 5, 3}};
  const auto m = build_mask(boxes, 3, 5);
  for (double v : m.weights()) EXPECT_EQ(v, 1.0);
}

TEST(BuildMask, OverlapStripAdditive) {
  // Two 4x4 boxes sharing columns 2-3.
  const std::vector<BoundingBox> boxes{{0, 0, 4, 4}, {2, 0, 6, 4}};
  const auto add = build_mask(boxes, 4, 8, MaskMode::additive);
  const auto bin = build_mask(boxes, 4, 8, MaskMode::binary);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 8; ++x) {
      const double expect = x < 2 ? 1 : x < 4 ? 2 : x < 6 ? 1 : 0;
      EXPECT_EQ(add.at(y, x), expect) << y << "," << x;
      EXPECT_EQ(bin.at(y, x), expect > 0 ? 1.0 : 0.0);
    }
  }
}

TEST(BuildMask, MatchesBruteForceOnRandomBoxes) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-4.0, 24.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<BoundingBox> boxes;
    const int n = trial % 5;
    for (int i = 0; i < n; ++i) {
      const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
      boxes.push_back({std::min(a, b), std::min(c, d), std::max(a, b) + 0.1, std::max(c, d) + 0.1});
    }
    for (auto mode : {MaskMode::binary, MaskMode::additive}) {
      const auto m = build_mask(boxes, 17, 21, mode);
      const auto oracle = rasterize(boxes, 17, 21, mode);
      ASSERT_TRUE(std::ranges::equal(m.weights(), oracle)) << "trial " << trial;
    }
  }
}

ImageBuffer row(double a, double b) { return ImageBuffer(1, 2, std::vector<double>{a, b, a, b, a, b}); }

PixelField field_row(double a, double b) {
  PixelField f(1, 2);
  for (int c = 0; c < 3; ++c) {
    f.at(c, 0, 0) = a;
    f.at(c, 0, 1) = b;
  }
  return f;
}

TEST(MaskedAscentStep, WorkedExample) {
  const PerturbationMask mask(1, 2, {1.0, 0.0}, MaskMode::binary);
  const auto out = masked_ascent_step(row(0.5, 0.5), field_row(2, -4), mask, 0.1,
                                      GradientNormalization::max_abs);
  for (int c = 0; c < 3; ++c) {
    EXPECT_DOUBLE_EQ(out.at(c, 0, 0), 0.55);
    EXPECT_EQ(out.at(c, 0, 1), 0.5);
  }
}

TEST(MaskedAscentStep, SignAndRawNormalization) {
  const PerturbationMask mask(1, 2, {1.0, 1.0}, MaskMode::binary);
  const auto s = masked_ascent_step(row(0.5, 0.5), field_row(2, -4), mask, 0.1,
                                    GradientNormalization::sign);
  EXPECT_DOUBLE_EQ(s.at(0, 0, 0), 0.6);
  EXPECT_DOUBLE_EQ(s.at(0, 0, 1), 0.4);
  const auto r = masked_ascent_step(row(0.5, 0.5), field_row(0.2, -4), mask, 0.1,
                                    GradientNormalization::raw);
  EXPECT_DOUBLE_EQ(r.at(0, 0, 0), 0.52);
  EXPECT_DOUBLE_EQ(r.at(0, 0, 1), 0.1);
}

TEST(MaskedAscentStep, ClampsToUnitRange) {
  const PerturbationMask mask(1, 2, {1.0, 1.0}, MaskMode::binary);
  const auto out = masked_ascent_step(row(0.95, 0.02), field_row(1, -1), mask, 0.1,
                                      GradientNormalization::sign);
  EXPECT_EQ(out.at(1, 0, 0), 1.0);
  EXPECT_EQ(out.at(1, 0, 1), 0.0);
}

TEST(MaskedAscentStep, AdditiveWeightScalesStep) {
  const PerturbationMask mask(1, 2, {2.0, 1.0}, MaskMode::additive);
  const auto out = masked_ascent_step(row(0.5, 0.5), field_row(1, 1), mask, 0.1,
                                      GradientNormalization::max_abs);
  EXPECT_DOUBLE_EQ(out.at(0, 0, 0), 0.7);
  EXPECT_DOUBLE_EQ(out.at(0, 0, 1), 0.6);
}

TEST(MaskedAscentStep, ZeroGradientOrMaskLeavesImageUnchanged) {
  const auto img = test::random_image(1, 6, 7);
  const auto full = build_mask(std::vector<BoundingBox>{{0, 0, 7, 6}}, 6, 7);
  const auto none = build_mask({}, 6, 7);
  PixelField g(6, 7);
  EXPECT_EQ(masked_ascent_step(img, g, full, 0.1, GradientNormalization::max_abs), img);
  for (auto& v : g.values()) v = 3.0;
  EXPECT_EQ(masked_ascent_step(img, g, none, 0.1, GradientNormalization::max_abs), img);
}

TEST(MaskedAscentStep, UnmaskedPixelsBitIdentical) {
  const auto img = test::random_image(2, 8, 8);
  const auto mask = build_mask(std::vector<BoundingBox>{{2, 2, 5, 6}}, 8, 8);
  const auto g = [] {
    PixelField f(8, 8);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    for (auto& v : f.values()) v = n(rng);
    return f;
  }();
  const auto out = masked_ascent_step(img, g, mask, 0.05, GradientNormalization::raw);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        if (mask.at(y, x) == 0.0) EXPECT_EQ(out.at(c, y, x), img.at(c, y, x));
      }
    }
  }
}

TEST(MaskedAscentStep, Errors) {
  const auto img = test::random_image(4, 2, 2);
  const auto mask = build_mask(std::vector<BoundingBox>{{0, 0, 2, 2}}, 2, 2);
  PixelField g(2, 2);
  g.at(0, 0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW_CODE(masked_ascent_step(img, g, mask, 0.1, GradientNormalization::max_abs), Errc::numeric);
  EXPECT_THROW_CODE(masked_ascent_step(img, PixelField(2, 3), mask, 0.1, GradientNormalization::raw),
                    Errc::shape);
  EXPECT_THROW_CODE(masked_ascent_step(img, PixelField(2, 2), mask, 0.0, GradientNormalization::raw),
                    Errc::invalid_argument);
}

// Records every detection set and image the attack loop sees.
class Recorder : public DetectorAdapter {
 public:
  explicit Recorder(std::unique_ptr<DetectorAdapter> inner) : inner_(std::move(inner)) {}
  std::string name() const override { return inner_->name(); }
  const std::vector<std::string>& class_vocabulary() const override {
    return inner_->class_vocabulary();
  }
  std::optional<InputSize> native_input_size() const override { return inner_->native_input_size(); }
  DetectionSet detect(const ImageBuffer& image, double t) override {
    auto d = inner_->detect(image, t);
    seen.push_back(d);
    images.push_back(image);
    return d;
  }
  GradientResult loss_and_input_gradient(const ImageBuffer& image, const PseudoLabelSet& p) override {
    return inner_->loss_and_input_gradient(image, p);
  }
  std::pair<DetectionSet, GradientResult> detect_and_gradient(const ImageBuffer& image, double t,
                                                              const PseudoLabelSet& p) override {
    auto r = inner_->detect_and_gradient(image, t, p);
    seen.push_back(r.first);
    images.push_back(image);
    return r;
  }
  std::unique_ptr<DetectorAdapter> clone() const override {
    return std::make_unique<Recorder>(inner_->clone());
  }

  std::vector<DetectionSet> seen;
  std::vector<ImageBuffer> images;

 private:
  std::unique_ptr<DetectorAdapter> inner_;
};

ImageBuffer dark_square_scene() {
  // Mid-gray canvas with two darker squares so the brightness adapter fires.
  std::vector<double> px(3 * 32 * 32, 0.6);
  for (int c = 0; c < 3; ++c) {
    for (int y = 4; y < 12; ++y) {
      for (int x = 4; x < 12; ++x) px[(c * 32 + y) * 32 + x] = 0.2;
    }
    for (int y = 18; y < 28; ++y) {
      for (int x = 16; x < 26; ++x) px[(c * 32 + y) * 32 + x] = 0.3 + 0.001 * x;
    }
  }
  return ImageBuffer(32, 32, std::move(px));
}

std::vector<BoundingBox> dark_boxes() { return {{4, 4, 12, 12}, {16, 18, 26, 28}}; }

TEST(GenerateAdversarial, NoDetectionsReturnsOriginal) {
  test::FrozenAdapter a({});
  const auto img = test::random_image(9, 8, 8);
  const auto r = generate_adversarial(a, img, AttackConfig{});
  EXPECT_EQ(r.iterations_run, 0);
  EXPECT_EQ(r.stop_reason, StopReason::no_detections);
  EXPECT_EQ(r.adversarial_image, img);
  EXPECT_TRUE(r.trace.empty());
}

TEST(GenerateAdversarial, ZeroTargetDistortionStopsImmediately) {
  test::BrightnessAdapter a(dark_boxes());
  const auto img = dark_square_scene();
  AttackConfig c;
  c.target_distortion = 0.0;
  const auto r = generate_adversarial(a, img, c);
  EXPECT_EQ(r.iterations_run, 1);
  EXPECT_EQ(r.stop_reason, StopReason::distortion_reached);
  EXPECT_EQ(r.adversarial_image, img);
}

TEST(GenerateAdversarial, BrightnessStubRunsUntilBoxesVanish) {
  test::BrightnessAdapter a(dark_boxes());
  const auto r = generate_adversarial(a, dark_square_scene(), AttackConfig{});
  EXPECT_EQ(r.stop_reason, StopReason::no_detections);
  // The darker box needs 0.3 / 0.01 = 30 steps; allow one step of rounding.
  EXPECT_GE(r.iterations_run, 30);
  EXPECT_LE(r.iterations_run, 32);
  EXPECT_EQ(r.trace.size(), static_cast<std::size_t>(r.iterations_run));
  EXPECT_EQ(r.trace.back().detection_count, 0);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    EXPECT_GE(r.trace[i].loss.total, r.trace[i - 1].loss.total);
  }
}

TEST(GenerateAdversarial, FrozenStubRunsToMaxIterationsUnchanged) {
  test::FrozenAdapter a({{{0, 0, 4, 4}, 0, 0.9}});
  const auto img = test::random_image(10, 8, 8);
  AttackConfig c;
  c.max_iterations = 7;
  const auto r = generate_adversarial(a, img, c);
  EXPECT_EQ(r.iterations_run, 7);
  EXPECT_EQ(r.stop_reason, StopReason::max_iterations);
  EXPECT_EQ(r.adversarial_image, img);
}

TEST(GenerateAdversarial, DistortionControlIsSound) {
  test::BrightnessAdapter a(dark_boxes());
  for (double s : {0.001, 0.005, 0.02}) {
    AttackConfig c;
    c.target_distortion = s;
    const auto img = dark_square_scene();
    const auto r = generate_adversarial(a, img, c);
    if (r.stop_reason != StopReason::distortion_reached) continue;
    EXPECT_GE(distortion(img, r.adversarial_image), s);
    ASSERT_GE(r.trace.size(), 2u);
    EXPECT_LT(r.trace[r.trace.size() - 2].distortion, s);
    EXPECT_EQ(r.trace.back().distortion, distortion(img, r.adversarial_image));
  }
}

TEST(GenerateAdversarial, SuccessControlIsSound) {
  test::BrightnessAdapter a(dark_boxes());
  AttackConfig c;
  c.target_success_rate = 0.5;
  const auto img = dark_square_scene();
  const auto r = generate_adversarial(a, img, c);
  EXPECT_EQ(r.stop_reason, StopReason::success_rate_reached);
  const auto after = detect(a, r.adversarial_image, c.confidence_threshold);
  EXPECT_GE(per_image_success(r.initial_detections, after), 0.5);
  EXPECT_LT(per_image_success(r.initial_detections, after), 1.0);
}

TEST(GenerateAdversarial, DistortionCheckedBeforeSuccess) {
  // Both controls satisfied on the clean image: distortion wins.
  test::BrightnessAdapter a(dark_boxes());
  AttackConfig c;
  c.target_distortion = 0.0;
  c.target_success_rate = 0.0;
  EXPECT_EQ(generate_adversarial(a, dark_square_scene(), c).stop_reason,
            StopReason::distortion_reached);
  c.target_distortion.reset();
  EXPECT_EQ(generate_adversarial(a, dark_square_scene(), c).stop_reason,
            StopReason::success_rate_reached);
}

TEST(GenerateAdversarial, AnnotationTargetsOverridePseudoLabels) {
  test::BrightnessAdapter a(dark_boxes());
  const PseudoLabelSet only_first({BoundingBox{4, 4, 12, 12}}, {0});
  const auto r = generate_adversarial(a, dark_square_scene(), AttackConfig{}, only_first);
  // Only the first box receives gradient, so the second never disappears.
  EXPECT_EQ(r.stop_reason, StopReason::max_iterations);
  EXPECT_EQ(r.trace.back().detection_count, 1);
}

TEST(GenerateAdversarial, InvalidConfigRejected) {
  test::FrozenAdapter a({});
  AttackConfig c;
  c.step_size = -1;
  EXPECT_THROW_CODE(generate_adversarial(a, ImageBuffer(4, 4), c), Errc::configuration);
}

TEST(GenerateAdversarial, ToyMaskConfinementAndBounds) {
  Recorder rec(test::toy());
  for (std::uint64_t i = 0; i < 3; ++i) {
    rec.seen.clear();
    rec.images.clear();
    const auto img = generate_scene(scene_seed(21, i)).image;
    AttackConfig c;
    c.max_iterations = 60;
    const auto r = generate_adversarial(rec, img, c);
    std::vector<BoundingBox> all;
    for (const auto& d : rec.seen) {
      for (const auto& det : d) all.push_back(det.box);
    }
    const auto covered = build_mask(all, 32, 32);
    for (int ch = 0; ch < 3; ++ch) {
      for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) {
          if (covered.at(y, x) == 0.0) {
            ASSERT_EQ(r.adversarial_image.at(ch, y, x), img.at(ch, y, x));
          }
        }
      }
    }
    for (const auto& seen : rec.images) {
      for (double v : seen.pixels()) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
    }
  }
}

TEST(GenerateAdversarial, ToyTwoObjectSceneIsFooled) {
  auto det = test::toy();
  SceneOptions o;
  o.min_objects = 2;
  o.max_objects = 2;
  for (std::uint64_t i = 0; i < 3; ++i) {
    const auto img = generate_scene(scene_seed(23, i), o).image;
    AttackConfig c;
    c.target_success_rate = 1.0;
    const auto r = generate_adversarial(*det, img, c);
    EXPECT_TRUE(r.stop_reason == StopReason::success_rate_reached ||
                r.stop_reason == StopReason::no_detections)
        << to_string(r.stop_reason);
    EXPECT_LT(r.iterations_run, 500);
  }
}

TEST(GenerateAdversarial, ToyIsDeterministic) {
  auto a = test::toy();
  auto b = a->clone();
  const auto img = generate_scene(scene_seed(25, 0)).image;
  AttackConfig c;
  c.max_iterations = 40;
  const auto ra = generate_adversarial(*a, img, c);
  const auto rb = generate_adversarial(*b, img, c);
  EXPECT_EQ(ra.adversarial_image, rb.adversarial_image);
  EXPECT_EQ(ra.iterations_run, rb.iterations_run);
  ASSERT_EQ(ra.trace.size(), rb.trace.size());
  for (std::size_t i = 0; i < ra.trace.size(); ++i) {
    EXPECT_EQ(ra.trace[i].loss.total, rb.trace[i].loss.total);
    EXPECT_EQ(ra.trace[i].distortion, rb.trace[i].distortion);
  }
}

// Reference sweep: one full attack per S, success by fresh detection.
std::vector<SweepPoint> sweep_oracle(DetectorAdapter& adapter, const ImageBuffer& img,
                                     const AttackConfig& base, const std::vector<double>& ss) {
  std::vector<SweepPoint> out;
  for (double s : ss) {
    AttackConfig c = base;
    c.target_distortion = s;
    const auto r = generate_adversarial(adapter, img, c);
    SweepPoint p;
    p.target_distortion = s;
    p.iterations = r.iterations_run;
    p.stop_reason = r.stop_reason;
    if (r.initial_detections.empty()) {
      p.skipped = true;
    } else {
      p.achieved_distortion = distortion(img, r.adversarial_image);
      p.success = per_image_success(r.initial_detections,
                                    detect(adapter, r.adversarial_image, c.confidence_threshold),
                                    c.iou_match);
    }
    out.push_back(p);
  }
  return out;
}

void expect_same_points(const std::vector<SweepPoint>& got, const std::vector<SweepPoint>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    SCOPED_TRACE("S = " + std::to_string(want[i].target_distortion));
    EXPECT_EQ(got[i].skipped, want[i].skipped);
    EXPECT_EQ(got[i].iterations, want[i].iterations);
    EXPECT_EQ(got[i].stop_reason, want[i].stop_reason);
    EXPECT_EQ(got[i].achieved_distortion, want[i].achieved_distortion);
    EXPECT_EQ(got[i].success, want[i].success);
  }
}

TEST(AttackSweep, MatchesIndependentRunsOnStub) {
  test::BrightnessAdapter a(dark_boxes());
  const std::vector<double> ss{0.0005, 0.002, 0.01, 0.05, 0.5};
  AttackConfig base;
  base.max_iterations = 25;
  const auto img = dark_square_scene();
  expect_same_points(attack_sweep(a, img, base, ss), sweep_oracle(a, img, base, ss));
}

TEST(AttackSweep, MatchesIndependentRunsOnToy) {
  auto det = test::toy();
  const std::vector<double> ss{0.02, 0.05, 0.1, 0.2};
  AttackConfig base;
  base.target_success_rate = 1.0;
  for (std::uint64_t i = 0; i < 3; ++i) {
    const auto img = generate_scene(scene_seed(27, i)).image;
    expect_same_points(attack_sweep(*det, img, base, ss), sweep_oracle(*det, img, base, ss));
  }
}

TEST(AttackSweep, SkipsImagesWithoutDetections) {
  test::FrozenAdapter a({});
  const std::vector<double> ss{0.1};
  const auto pts = attack_sweep(a, test::random_image(1, 8, 8), AttackConfig{}, ss);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_TRUE(pts[0].skipped);
}

TEST(AttackSweep, AchievedDistortionIsMonotone) {
  test::BrightnessAdapter a(dark_boxes());
  const std::vector<double> ss{0.0002, 0.0005, 0.001, 0.002, 0.004};
  const auto pts = attack_sweep(a, dark_square_scene(), AttackConfig{}, ss);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    EXPECT_LE(pts[i - 1].achieved_distortion, pts[i].achieved_distortion);
  }
}

TEST(AttackSweep, RejectsBadSValues) {
  test::FrozenAdapter a({});
  const auto img = ImageBuffer(4, 4);
  const std::vector<double> unordered{0.2, 0.1}, zero{0.0}, big{1.5};
  EXPECT_THROW_CODE(attack_sweep(a, img, AttackConfig{}, unordered), Errc::invalid_argument);
  EXPECT_THROW_CODE(attack_sweep(a, img, AttackConfig{}, zero), Errc::invalid_argument);
  EXPECT_THROW_CODE(attack_sweep(a, img, AttackConfig{}, big), Errc::invalid_argument);
}

}  // namespace
}  // namespace advdet
