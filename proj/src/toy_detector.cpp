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

#include "advdet/toy_detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <system_error>

#include "advdet/metrics.hpp"
#include "toy_network.hpp"

namespace advdet {

namespace {

constexpr double kNmsIou = 0.45;
constexpr std::uint64_t kTrainStream = 0x747261696eULL;       // "train"
constexpr std::uint64_t kValidationStream = 0x76616c6964ULL;  // "valid"
constexpr std::uint64_t kBlankStream = 0x626c616e6bULL;       // "blank"

toy::NetworkShape shape_for(ToyCapacity capacity) {
  toy::NetworkShape shape;
  if (capacity == ToyCapacity::large) {
    shape.width1 = 16;
    shape.width2 = 32;
    shape.width3 = 32;
  }
  return shape;
}

const char* capacity_name(ToyCapacity capacity) {
  return capacity == ToyCapacity::large ? "large" : "small";
}

/// Bilinear resampling (half-pixel centres) as a sparse linear map from a
/// source plane to a destination plane, so it can be applied transposed.
class Resampler {
 public:
  Resampler(int src_h, int src_w, int dst_h, int dst_w)
      : src_h_(src_h), src_w_(src_w), dst_h_(dst_h), dst_w_(dst_w) {
    taps_.reserve(static_cast<std::size_t>(dst_h) * dst_w);
    const double sy = static_cast<double>(src_h) / dst_h;
    const double sx = static_cast<double>(src_w) / dst_w;
    for (int y = 0; y < dst_h; ++y) {
      const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src_h - 1.0);
      const int y0 = static_cast<int>(std::floor(fy));
      const int y1 = std::min(y0 + 1, src_h - 1);
      const double wy = fy - y0;
      for (int x = 0; x < dst_w; ++x) {
        const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src_w - 1.0);
        const int x0 = static_cast<int>(std::floor(fx));
        const int x1 = std::min(x0 + 1, src_w - 1);
        const double wx = fx - x0;
        taps_.push_back({{idx(y0, x0), idx(y0, x1), idx(y1, x0), idx(y1, x1)},
                         {(1 - wy) * (1 - wx), (1 - wy) * wx, wy * (1 - wx), wy * wx}});
      }
    }
  }

  std::vector<double> apply(std::span<const double> src) const {
    const std::size_t sp = static_cast<std::size_t>(src_h_) * src_w_;
    const std::size_t dp = static_cast<std::size_t>(dst_h_) * dst_w_;
    std::vector<double> dst(3 * dp, 0.0);
    for (int c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < dp; ++i) {
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v += taps_[i].weight[k] * src[c * sp + taps_[i].index[k]];
        dst[c * dp + i] = v;
      }
    }
    return dst;
  }

  std::vector<double> apply_transposed(std::span<const double> dst) const {
    const std::size_t sp = static_cast<std::size_t>(src_h_) * src_w_;
    const std::size_t dp = static_cast<std::size_t>(dst_h_) * dst_w_;
    std::vector<double> src(3 * sp, 0.0);
    for (int c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < dp; ++i) {
        for (int k = 0; k < 4; ++k) src[c * sp + taps_[i].index[k]] += taps_[i].weight[k] * dst[c * dp + i];
      }
    }
    return src;
  }

 private:
  struct Tap {
    std::size_t index[4];
    double weight[4];
  };
  std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * src_w_ + x; }

  int src_h_, src_w_, dst_h_, dst_w_;
  std::vector<Tap> taps_;
};

class ToyDetector final : public DetectorAdapter {
 public:
  ToyDetector(std::shared_ptr<const toy::Network> net, std::string name)
      : net_(std::move(net)), name_(std::move(name)) {}

  std::string name() const override { return name_; }
  const std::vector<std::string>& class_vocabulary() const override {
    return synthetic_class_names();
  }
  std::optional<InputSize> native_input_size() const override {
    const int s = net_->shape().input_size;
    return InputSize{s, s};
  }

  DetectionSet detect(const ImageBuffer& image, double threshold) override {
    run_forward(image);
    return decode(image, threshold);
  }

  GradientResult loss_and_input_gradient(const ImageBuffer& image,
                                         const PseudoLabelSet& targets) override {
    run_forward(image);
    return gradient(image, targets);
  }

  std::pair<DetectionSet, GradientResult> detect_and_gradient(
      const ImageBuffer& image, double threshold, const PseudoLabelSet& targets) override {
    run_forward(image);
    auto dets = decode(image, threshold);
    return {std::move(dets), gradient(image, targets)};
  }

  std::unique_ptr<DetectorAdapter> clone() const override {
    return std::make_unique<ToyDetector>(net_, name_);
  }

  const toy::Network& network() const { return *net_; }

 private:
  const Resampler* resampler_for(const ImageBuffer& image) {
    const int s = net_->shape().input_size;
    if (image.height() == s && image.width() == s) return nullptr;
    if (!resampler_ || resample_h_ != image.height() || resample_w_ != image.width()) {
      resampler_ = std::make_unique<Resampler>(image.height(), image.width(), s, s);
      resample_h_ = image.height();
      resample_w_ = image.width();
    }
    return resampler_.get();
  }

  void run_forward(const ImageBuffer& image) {
    if (const auto* r = resampler_for(image)) {
      const auto resized = r->apply(image.pixels());
      net_->forward(resized, act_);
    } else {
      net_->forward(image.pixels(), act_);
    }
  }

  double scale_x(const ImageBuffer& image) const {
    return static_cast<double>(image.width()) / net_->shape().input_size;
  }
  double scale_y(const ImageBuffer& image) const {
    return static_cast<double>(image.height()) / net_->shape().input_size;
  }

  DetectionSet decode(const ImageBuffer& image, double threshold) const {
    const double sx = scale_x(image);
    const double sy = scale_y(image);
    std::vector<Detection> dets;
    for (const auto& c : net_->decode(act_.out, threshold)) {
      BoundingBox box{c.box.x_min * sx, c.box.y_min * sy, c.box.x_max * sx, c.box.y_max * sy};
      box = box.clamped(image.width(), image.height());
      if (box.valid()) dets.push_back({box, c.class_id, c.confidence});
    }
    return DetectionSet(non_max_suppression(std::move(dets), kNmsIou), threshold);
  }

  GradientResult gradient(const ImageBuffer& image, const PseudoLabelSet& targets) {
    const double sx = scale_x(image);
    const double sy = scale_y(image);
    std::vector<toy::Target> net_targets;
    net_targets.reserve(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const auto& b = targets.boxes()[i];
      const int cls = targets.class_ids()[i];
      if (cls < 0 || cls >= net_->shape().num_classes) {
        throw Error(Errc::invalid_argument, "target class id outside the toy vocabulary");
      }
      net_targets.push_back({{b.x_min / sx, b.y_min / sy, b.x_max / sx, b.y_max / sy}, cls});
    }
    toy::Tensor d_out;
    const auto loss = net_->loss(act_.out, net_targets, &d_out);
    std::vector<double> d_input;
    net_->backward(act_, d_out, &d_input, nullptr);
    if (const auto* r = resampler_for(image)) d_input = r->apply_transposed(d_input);
    return {loss, PixelField(image.height(), image.width(), std::move(d_input))};
  }

  std::shared_ptr<const toy::Network> net_;
  std::string name_;
  toy::Activations act_;
  std::unique_ptr<Resampler> resampler_;
  int resample_h_ = 0;
  int resample_w_ = 0;
};

struct Adam {
  double lr = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  int step = 0;
  std::vector<std::vector<double>> m, v;

  void update(const std::vector<std::vector<double>*>& params, const toy::ParamGrads& g,
              double scale) {
    if (m.empty()) {
      for (const auto* p : params) {
        m.emplace_back(p->size(), 0.0);
        v.emplace_back(p->size(), 0.0);
      }
    }
    ++step;
    const double c1 = 1.0 - std::pow(beta1, step);
    const double c2 = 1.0 - std::pow(beta2, step);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = *params[i];
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double grad = g.grads[i][j] * scale + weight_decay * p[j];
        m[i][j] = beta1 * m[i][j] + (1 - beta1) * grad;
        v[i][j] = beta2 * v[i][j] + (1 - beta2) * grad * grad;
        p[j] -= lr * (m[i][j] / c1) / (std::sqrt(v[i][j] / c2) + eps);
      }
    }
  }
};

std::vector<toy::Target> to_targets(const std::vector<GroundTruthBox>& objects) {
  std::vector<toy::Target> t;
  for (const auto& o : objects) t.push_back({o.box, o.class_id});
  return t;
}

// No detections at all on a batch of object-free backgrounds.
bool silent_on_blanks(DetectorAdapter& detector, std::uint64_t stream) {
  constexpr int kBlankScenes = 100;
  for (int i = 0; i < kBlankScenes; ++i) {
    if (!detector.detect(generate_blank(scene_seed(stream ^ kBlankStream, i)), 0.5).empty()) return false;
  }
  return true;
}

toy::Network train(std::uint64_t seed, ToyCapacity capacity, const ToyBuildOptions& options) {
  const auto shape = shape_for(capacity);
  toy::Network net(shape, seed);
  constexpr int kBatch = 8;
  constexpr int kCheckEvery = 250;
  constexpr int kMinSteps = 3000;
  constexpr int kValidationScenes = 40;

  SceneOptions train_scenes;
  train_scenes.min_objects = 0;

  Adam adam;
  // Strong decay keeps input gradients spread over the whole object instead
  // of a few saturated pixels, which the max-abs step cannot move.
  adam.weight_decay = 1.0;
  toy::Activations act;
  toy::Tensor d_out;
  auto params = net.parameters();
  std::uint64_t scene_index = 0;
  const std::uint64_t train_seed = seed ^ kTrainStream;
  const std::uint64_t valid_seed = seed ^ kValidationStream;

  for (int step = 1; step <= options.max_steps; ++step) {
    auto grads = net.zero_grads();
    for (int b = 0; b < kBatch; ++b) {
      const auto scene = generate_scene(scene_seed(train_seed, scene_index++), train_scenes);
      net.forward(scene.image.pixels(), act);
      const auto targets = to_targets(scene.objects);
      net.loss(act.out, targets, &d_out);
      net.backward(act, d_out, nullptr, &grads);
    }
    if (step == options.max_steps * 3 / 4) adam.lr *= 0.3;
    adam.update(params, grads, 1.0 / kBatch);

    if (step >= kMinSteps && step % kCheckEvery == 0) {
      ToyDetector probe(std::make_shared<const toy::Network>(net), "toy-training");
      if (detection_recall(probe, valid_seed, kValidationScenes) >= options.target_recall &&
          silent_on_blanks(probe, valid_seed)) {
        return net;
      }
    }
  }
  std::ostringstream os;
  os << "toy detector (seed " << seed << ", " << capacity_name(capacity)
     << ") did not reach validation recall " << options.target_recall << " within "
     << options.max_steps << " steps";
  throw Error(Errc::backend, os.str());
}

// Bump when the training recipe changes so stale weight files are not reused.
constexpr int kRecipe = 4;

std::filesystem::path cache_file(const std::filesystem::path& dir, std::uint64_t seed,
                                 ToyCapacity capacity) {
  return dir / ("toy-" + std::string(capacity_name(capacity)) + "-r" + std::to_string(kRecipe) +
                "-seed" + std::to_string(seed) + ".bin");
}

std::shared_ptr<const toy::Network> load_or_train(std::uint64_t seed, ToyBuildOptions options) {
  if (!options.use_cache) {
    return std::make_shared<const toy::Network>(train(seed, options.capacity, options));
  }
  if (options.model_dir.empty()) options.model_dir = default_model_dir();
  static std::mutex mutex;
  static std::map<std::pair<std::uint64_t, ToyCapacity>, std::shared_ptr<const toy::Network>> cache;

  std::lock_guard<std::mutex> lock(mutex);
  const auto key = std::make_pair(seed, options.capacity);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  std::shared_ptr<const toy::Network> net;
  if (!options.model_dir.empty()) {
    const auto path = cache_file(options.model_dir, seed, options.capacity);
    if (std::ifstream in(path, std::ios::binary); in) {
      try {
        auto loaded = toy::Network::load(in);
        if (loaded.shape().width1 == shape_for(options.capacity).width1) {
          net = std::make_shared<const toy::Network>(std::move(loaded));
        }
      } catch (const Error&) {
        net.reset();  // stale or partial file: retrain below
      }
    }
  }
  if (!net) {
    net = std::make_shared<const toy::Network>(train(seed, options.capacity, options));
    if (!options.model_dir.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(options.model_dir, ec);
      const auto path = cache_file(options.model_dir, seed, options.capacity);
      auto tmp = path;
      tmp += ".tmp" + std::to_string(std::random_device{}());
      {
        std::ofstream out(tmp, std::ios::binary);
        if (out) net->save(out);
      }
      std::filesystem::rename(tmp, path, ec);
      if (ec) std::filesystem::remove(tmp, ec);
    }
  }
  cache.emplace(key, net);
  return net;
}

}  // namespace

std::uint64_t toy_holdout_batch_seed() { return 0x686f6c646f7574ULL; }  // "holdout"

double detection_recall(DetectorAdapter& adapter, std::uint64_t batch_seed, int scene_count,
                        double threshold, const SceneOptions& options) {
  std::size_t total = 0;
  std::size_t found = 0;
  for (int i = 0; i < scene_count; ++i) {
    const auto scene = generate_scene(scene_seed(batch_seed, static_cast<std::uint64_t>(i)), options);
    const auto dets = adapter.detect(scene.image, threshold);
    for (const auto& gt : scene.objects) {
      ++total;
      const bool hit = std::any_of(dets.begin(), dets.end(), [&](const Detection& d) {
        return d.class_id == gt.class_id && iou(d.box, gt.box) >= 0.5;
      });
      if (hit) ++found;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(found) / static_cast<double>(total);
}

std::unique_ptr<DetectorAdapter> toy_detector_build(std::uint64_t seed,
                                                    const ToyBuildOptions& options) {
  auto net = load_or_train(seed, options);
  return std::make_unique<ToyDetector>(std::move(net),
                                       options.capacity == ToyCapacity::large ? "toy-large" : "toy");
}

bool toy_weights_equal(const DetectorAdapter& a, const DetectorAdapter& b) {
  const auto* ta = dynamic_cast<const ToyDetector*>(&a);
  const auto* tb = dynamic_cast<const ToyDetector*>(&b);
  return ta != nullptr && tb != nullptr && ta->network() == tb->network();
}

}  // namespace advdet
