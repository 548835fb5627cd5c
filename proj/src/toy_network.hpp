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

// Small single-stage grid detector with hand-written forward and backward
// passes. Internal to the library; reached through ToyDetector.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "advdet/core.hpp"

namespace advdet::toy {

struct Tensor {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<double> data;

  void resize(int channels, int height, int width) {
    c = channels;
    h = height;
    w = width;
    data.assign(static_cast<std::size_t>(c) * h * w, 0.0);
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  double& at(int ch, int y, int x) { return data[(ch * plane()) + static_cast<std::size_t>(y) * w + x]; }
  double at(int ch, int y, int x) const {
    return data[(ch * plane()) + static_cast<std::size_t>(y) * w + x];
  }
};

/// Same-padded, stride-1 convolution; weight is out x (in * k * k), row-major.
struct Conv2d {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  std::vector<double> weight;
  std::vector<double> bias;

  void init(int in, int out, int k, std::mt19937_64& rng);
};

/// Output channel layout per grid cell.
struct HeadLayout {
  static constexpr int kObj = 0;
  static constexpr int kTx = 1;
  static constexpr int kTy = 2;
  static constexpr int kTw = 3;
  static constexpr int kTh = 4;
  static constexpr int kClassBase = 5;
};

struct NetworkShape {
  int input_size = 32;
  int width1 = 8;
  int width2 = 16;
  int width3 = 16;
  int num_classes = 3;
  int stride = 4;
  double anchor = 11.5;
  double noobj_weight = 0.5;
  /// Negative cells whose predicted box overlaps a target above this IoU are
  /// left out of the objectness loss.
  double ignore_iou = 0.5;

  int grid() const { return input_size / stride; }
};

/// Gradients w.r.t. every parameter, laid out like Network::parameters().
struct ParamGrads {
  std::vector<std::vector<double>> grads;
};

/// Intermediate values kept for the backward pass.
struct Activations {
  Tensor input;
  std::vector<double> col1, col2, col3;
  Tensor a1, p1, a2, p2, a3, s3, out;
  Tensor s1, s2;
};

struct Target {
  BoundingBox box;  // network-input frame
  int class_id = 0;
};

struct Candidate {
  BoundingBox box;  // network-input frame
  int class_id = 0;
  double confidence = 0.0;
};

class Network {
 public:
  Network() = default;
  Network(const NetworkShape& shape, std::uint64_t seed);

  const NetworkShape& shape() const { return shape_; }

  /// `image` must be input_size x input_size.
  void forward(std::span<const double> image, Activations& act) const;

  /// Loss of the head output against targets; fills d_out when non-null.
  LossBreakdown loss(const Tensor& out, std::span<const Target> targets, Tensor* d_out) const;

  /// Back-propagates d_out. Writes d_input when non-null; accumulates
  /// parameter gradients when grads is non-null.
  void backward(const Activations& act, const Tensor& d_out, std::vector<double>* d_input,
                ParamGrads* grads) const;

  /// All cells scoring >= threshold, before NMS.
  std::vector<Candidate> decode(const Tensor& out, double threshold) const;

  std::vector<std::vector<double>*> parameters();
  std::vector<const std::vector<double>*> parameters() const;
  ParamGrads zero_grads() const;

  void save(std::ostream& os) const;
  static Network load(std::istream& is);

  bool operator==(const Network& other) const;

 private:
  BoundingBox cell_box(const Tensor& out, int gy, int gx) const;

  NetworkShape shape_;
  Conv2d conv1_, conv2_, conv3_, head_;
};

}  // namespace advdet::toy
