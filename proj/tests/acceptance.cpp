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

// Acceptance run: prints PASS/FAIL per criterion and exits non-zero if any
// criterion fails. Uses only the toy detector, so no weights are downloaded.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "advdet/attack.hpp"
#include "advdet/dataset.hpp"
#include "advdet/error.hpp"
#include "advdet/harness.hpp"
#include "advdet/image_io.hpp"
#include "advdet/metrics.hpp"
#include "advdet/synthetic.hpp"
#include "advdet/toy_detector.hpp"
#include "gradient_check.hpp"
#include "map_fixtures.hpp"

namespace fs = std::filesystem;
using namespace advdet;

namespace {

// Scenes for every criterion come from this batch, which was not used while
// tuning the toy detector or the attack.
constexpr std::uint64_t kBatch = 2026;

struct Outcome {
  bool pass = false;
  std::string detail;
};

ImageBuffer scene(int i) {
  return generate_scene(scene_seed(kBatch, static_cast<std::uint64_t>(i))).image;
}

std::unique_ptr<DetectorAdapter> toy(std::uint64_t seed) { return toy_detector_build(seed); }

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("advdet-acceptance-" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

/// Forwards to the wrapped adapter and keeps every detection set it returns.
class Recorder : public DetectorAdapter {
 public:
  explicit Recorder(DetectorAdapter& inner) : inner_(inner) {}
  std::string name() const override { return inner_.name(); }
  const std::vector<std::string>& class_vocabulary() const override {
    return inner_.class_vocabulary();
  }
  std::optional<InputSize> native_input_size() const override { return inner_.native_input_size(); }
  DetectionSet detect(const ImageBuffer& image, double t) override {
    auto d = inner_.detect(image, t);
    keep(d);
    return d;
  }
  GradientResult loss_and_input_gradient(const ImageBuffer& image, const PseudoLabelSet& p) override {
    return inner_.loss_and_input_gradient(image, p);
  }
  std::pair<DetectionSet, GradientResult> detect_and_gradient(const ImageBuffer& image, double t,
                                                              const PseudoLabelSet& p) override {
    auto r = inner_.detect_and_gradient(image, t, p);
    keep(r.first);
    return r;
  }
  std::unique_ptr<DetectorAdapter> clone() const override {
    throw Error(Errc::capability, "recorder cannot be cloned");
  }

  std::vector<BoundingBox> boxes;

 private:
  void keep(const DetectionSet& d) {
    for (const auto& det : d) boxes.push_back(det.box);
  }
  DetectorAdapter& inner_;
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

Outcome success_rate_arithmetic() {
  const double a = success_rate_from_map(33.26, 2.93);
  const double b = success_rate_from_map(45.15, 0.31);
  return {std::abs(a - 91.19) <= 0.01 && std::abs(b - 99.31) <= 0.01,
          fmt("%.4f%% and %.4f%%", a, b)};
}

Outcome ncc_identities() {
  bool ok = true;
  double worst_sym = 0.0, lo = 1.0, hi = 0.0;
  std::mt19937_64 rng(kBatch);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_image = [&](int h, int w) {
    std::vector<double> px(3 * static_cast<std::size_t>(h) * w);
    for (auto& v : px) v = u(rng);
    return ImageBuffer(h, w, std::move(px));
  };
  for (int i = 0; i < 100; ++i) {
    const auto a = random_image(16, 12);
    const auto b = random_image(16, 12);
    ok = ok && distortion(a, a) == 0.0;
    worst_sym = std::max(worst_sym, std::abs(compute_ncc(a, b) - compute_ncc(b, a)));
    // Anti-correlated partners: the photographic negative and a scaled one.
    std::vector<double> neg(a.pixels().begin(), a.pixels().end());
    std::vector<double> half(neg.size());
    for (std::size_t k = 0; k < neg.size(); ++k) {
      neg[k] = 1.0 - neg[k];
      half[k] = 0.5 - 0.3 * (a.pixels()[k] - 0.5);
    }
    for (const auto& p : {ImageBuffer(16, 12, neg), ImageBuffer(16, 12, half), b}) {
      const double d = distortion(a, p);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  ok = ok && worst_sym <= 1e-9 && lo >= 0.0 && hi <= 1.0;
  return {ok, fmt("max |NCC(a,b)-NCC(b,a)| %.1e, D range [%.4f, %.4f]", worst_sym, lo, hi)};
}

Outcome similarity_round_trip() {
  // Zero-mean orthogonal patterns p (columns) and q (rows): NCC(p, p + t q)
  // is 1/sqrt(1 + t^2), so t is chosen for similarity 0.9996.
  const double s = 0.9996;
  const double t = std::sqrt(1.0 / (s * s) - 1.0);
  const int h = 8, w = 8;
  std::vector<double> a, b;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double p = (x % 2 ? 0.1 : -0.1);
        const double q = (y % 2 ? 0.1 : -0.1);
        a.push_back(0.5 + p);
        b.push_back(0.5 + p + t * q);
      }
    }
  }
  const double d = distortion(ImageBuffer(h, w, a), ImageBuffer(h, w, b));
  const bool ok = std::abs(d - 0.0004) <= 1e-12 && std::abs((1.0 - d) - s) <= 1e-12 &&
                  std::abs((1.0 - 0.0004) - s) <= 1e-15;
  return {ok, fmt("D = %.12f for similarity 0.9996", d)};
}

Outcome gradient_check() {
  auto det = toy(1);
  double worst = 0.0;
  int probes = 0;
  for (int i = 0; i < 5; ++i) {
    const auto img = scene(i);
    const auto labels = make_pseudo_labels(detect(*det, img, 0.5));
    for (const auto& p : test::probe_gradient(*det, img, labels, 8, kBatch + i)) {
      worst = std::max(worst, p.relative_error);
      ++probes;
    }
  }
  return {probes == 40 && worst <= 1e-2, fmt("%d probes, worst relative error %.2e", probes, worst)};
}

Outcome mask_confinement() {
  auto det = toy(1);
  AttackConfig config;
  config.max_iterations = 120;
  int clean = 0, changed_total = 0;
  for (int i = 0; i < 10; ++i) {
    const auto img = scene(i);
    Recorder rec(*det);
    const auto r = generate_adversarial(rec, img, config);
    const auto mask = build_mask(rec.boxes, img.height(), img.width());
    bool ok = true;
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
          const bool same = r.adversarial_image.at(c, y, x) == img.at(c, y, x);
          if (mask.at(y, x) == 0.0 && !same) ok = false;
          if (!same) ++changed_total;
        }
      }
    }
    clean += ok;
  }
  return {clean == 10, fmt("%d/10 scenes confined, %d pixels changed in total", clean, changed_total)};
}

Outcome loss_ascent() {
  auto det = toy(1);
  AttackConfig config;
  config.max_iterations = 120;
  int rising = 0, runs = 0;
  for (int i = 0; i < 20; ++i) {
    const auto r = generate_adversarial(*det, scene(i), config);
    if (r.trace.empty()) continue;
    ++runs;
    rising += r.trace.back().loss.total >= r.trace.front().loss.total;
  }
  return {runs == 20 && rising >= 18, fmt("%d/%d runs end at or above their initial loss", rising, runs)};
}

Outcome stopping_soundness() {
  auto det = toy(1);
  std::ostringstream detail;
  bool ok = true;
  for (double s : {0.02, 0.05, 0.10}) {
    AttackConfig config;
    config.target_distortion = s;
    int by_distortion = 0, sound = 0;
    for (int i = 0; i < 10; ++i) {
      const auto r = generate_adversarial(*det, scene(i), config);
      if (r.stop_reason != StopReason::distortion_reached) continue;
      ++by_distortion;
      const auto& tr = r.trace;
      const double before = tr.size() >= 2 ? tr[tr.size() - 2].distortion : 0.0;
      sound += tr.back().distortion >= s && before < s;
    }
    ok = ok && sound == by_distortion;
    detail << "S=" << s << ": " << sound << "/" << by_distortion << " sound; ";
  }
  return {ok, detail.str()};
}

Outcome attack_efficacy() {
  auto det = toy(1);
  AttackConfig config;
  config.confidence_threshold = 0.5;
  config.target_success_rate = 1.0;
  config.max_iterations = 500;
  int fooled = 0, iterations = 0;
  for (int i = 0; i < 20; ++i) {
    const auto r = generate_adversarial(*det, scene(i), config);
    fooled += r.stop_reason == StopReason::success_rate_reached ||
              r.stop_reason == StopReason::no_detections;
    iterations = std::max(iterations, r.iterations_run);
  }
  return {fooled >= 18, fmt("%d/20 scenes fooled, longest run %d iterations", fooled, iterations)};
}

Outcome monotone_tradeoff() {
  auto det = toy(1);
  AttackConfig config;
  std::vector<double> s;
  for (int k = 1; k <= 10; ++k) s.push_back(0.02 * k);
  std::vector<std::vector<SweepPoint>> sweeps;
  for (int i = 0; i < 20; ++i) sweeps.push_back(attack_sweep(*det, scene(i), config, s));
  const auto series = rate_vs_distortion_series(sweeps);
  int inversions = 0;
  std::ostringstream detail;
  for (std::size_t k = 0; k < series.points.size(); ++k) {
    if (k > 0 && series.points[k].second < series.points[k - 1].second) ++inversions;
    detail << fmt("%.2f", series.points[k].second) << (k + 1 < series.points.size() ? " " : "");
  }
  return {series.points.size() == s.size() && inversions <= 1,
          fmt("%d inversions; mean success ", inversions) + detail.str()};
}

Outcome threshold_trend() {
  auto det = toy(1);
  AttackConfig config;
  config.target_success_rate = 1.0;
  std::vector<ImageBuffer> images;
  for (int i = 0; i < 20; ++i) images.push_back(scene(i));
  const std::vector<double> t{0.25, 0.50, 0.75};
  const auto points = confidence_sweep(*det, images, config, t);
  bool ok = points.size() == 3;
  std::ostringstream detail;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (k > 0 && points[k].mean_distortion > points[k - 1].mean_distortion) ok = false;
    detail << fmt("T=%.2f D=%.5f (n=%d) ", points[k].threshold, points[k].mean_distortion,
                  points[k].images);
  }
  return {ok, detail.str()};
}

Outcome transferability(const fs::path& root) {
  const auto data = write_synthetic_dataset(root / "data", kBatch, 10);
  auto a = toy(1);
  auto b = toy(2);
  AttackConfig config;
  config.target_success_rate = 1.0;
  std::vector<BatchManifest> sources;
  std::vector<std::string> labels{"toy:1", "toy:2"};
  int k = 0;
  for (auto* det : {a.get(), b.get()}) {
    BatchOptions o;
    o.output_root = root / ("adv" + std::to_string(k++));
    o.write_traces = false;
    sources.push_back(run_attack_batch(*det, data, config, o));
  }
  const std::vector<EvaluationTarget> targets{{"toy:1", a.get()}, {"toy:2", b.get()}};
  // Each manifest stores paths relative to its own output root.
  std::vector<TransferabilityMatrix> rows;
  for (std::size_t s = 0; s < 2; ++s) {
    const std::vector<BatchManifest> one{sources[s]};
    const std::vector<std::string> label{labels[s]};
    rows.push_back(evaluate_cross_model(one, targets, data, {}, root / ("adv" + std::to_string(s)), label));
  }
  BatchManifest identity;
  identity.detector = "identity";
  for (const auto& e : data.entries) {
    ManifestRow r;
    r.image_id = e.annotation.image_id;
    r.adversarial_path = e.image_path.lexically_relative(data.image_root).generic_string();
    identity.rows.push_back(r);
  }
  const std::vector<BatchManifest> id{identity};
  const auto clean = evaluate_cross_model(id, targets, data, {}, data.image_root);

  bool ok = clean.cells[0] == clean.baseline;
  std::ostringstream detail;
  detail << fmt("baseline %.4f %.4f; ", clean.baseline[0], clean.baseline[1]);
  for (std::size_t s = 0; s < 2; ++s) {
    const auto& row = rows[s].cells[0];
    ok = ok && row[s] <= row[1 - s] && rows[s].baseline == clean.baseline;
    detail << fmt("%s row %.4f %.4f; ", labels[s].c_str(), row[0], row[1]);
  }
  detail << (clean.cells[0] == clean.baseline ? "identity row equals baseline" : "identity row differs");
  return {ok, detail.str()};
}

Outcome map_oracle() {
  int good = 0, n = 0;
  double worst = 0.0;
  for (const auto& f : test::map_fixtures()) {
    const double got = compute_map(f.predictions, f.ground_truth, f.iou_thresholds).map_value;
    worst = std::max(worst, std::abs(got - f.expected_map));
    good += std::abs(got - f.expected_map) <= 1e-6;
    ++n;
  }
  return {n >= 5 && good == n, fmt("%d/%d fixtures, worst error %.1e", good, n, worst)};
}

Outcome persistence(const fs::path& root) {
  auto det = toy(1);
  AttackConfig config;
  config.target_success_rate = 1.0;
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    const auto img = scene(i);
    const auto adv = generate_adversarial(*det, img, config).adversarial_image;
    const auto file = root / ("adv" + std::to_string(i) + ".png");
    write_image(adv, file);
    worst = std::max(worst, std::abs(distortion(img, read_image(file)) - distortion(img, adv)));
  }
  int refused = 0;
  for (const char* name : {"x.jpg", "x.jpeg", "x.webp"}) {
    try {
      write_image(scene(0), root / name);
    } catch (const Error& e) {
      refused += e.code() == Errc::invalid_argument && !fs::exists(root / name);
    }
  }
  return {worst <= 2.0 / 255.0 && refused == 3,
          fmt("max |dD| after PNG round trip %.2e; %d/3 lossy writes refused", worst, refused)};
}

}  // namespace

int main(int argc, char** argv) {
  TempDir tmp;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"success-rate arithmetic", success_rate_arithmetic},
      {"NCC/distortion identities", ncc_identities},
      {"similarity/distortion round trip", similarity_round_trip},
      {"gradient correctness", gradient_check},
      {"mask confinement", mask_confinement},
      {"loss ascent", loss_ascent},
      {"stopping soundness", stopping_soundness},
      {"attack efficacy", attack_efficacy},
      {"monotone trade-off", monotone_tradeoff},
      {"threshold/distortion trend", threshold_trend},
      {"transferability mechanics", [&] { return transferability(tmp.path() / "transfer"); }},
      {"mAP oracle equivalence", map_oracle},
      {"persistence", [&] { return persistence(tmp.path()); }},
  };
  // Criterion numbers on the command line select a subset; none runs all.
  std::vector<std::size_t> selected;
  for (int a = 1; a < argc; ++a) {
    const long n = std::strtol(argv[a], nullptr, 10);
    if (n < 1 || n > static_cast<long>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion '%s'\n", argv[a]);
      return 2;
    }
    selected.push_back(static_cast<std::size_t>(n - 1));
  }
  if (selected.empty()) {
    for (std::size_t i = 0; i < criteria.size(); ++i) selected.push_back(i);
  }
  int failed = 0;
  for (std::size_t i : selected) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("%-4s %s  %s (%.1f s): %s\n", ("A" + std::to_string(i + 1)).c_str(),
                o.pass ? "PASS" : "FAIL", criteria[i].first, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", selected.size() - failed, selected.size());
  return failed == 0 ? 0 : 1;
}
