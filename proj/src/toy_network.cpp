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

#include "toy_network.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "advdet/metrics.hpp"

namespace advdet::toy {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<RowMatrix>;
using ConstMapMatrix = Eigen::Map<const RowMatrix>;

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// How far, in cells, a cell's predicted centre may sit from its own centre.
constexpr double kReach = 1.5;

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

void im2col(const Tensor& x, int k, std::vector<double>& col) {
  const int pad = k / 2;
  const std::size_t hw = x.plane();
  col.assign(static_cast<std::size_t>(x.c) * k * k * hw, 0.0);
  std::size_t row = 0;
  for (int c = 0; c < x.c; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx, ++row) {
        double* dst = col.data() + row * hw;
        for (int y = 0; y < x.h; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= x.h) continue;
          const double* src = x.data.data() + c * hw + static_cast<std::size_t>(sy) * x.w;
          double* d = dst + static_cast<std::size_t>(y) * x.w;
          const int x0 = std::max(0, pad - kx);
          const int x1 = std::min(x.w, x.w + pad - kx);
          for (int xx = x0; xx < x1; ++xx) d[xx] = src[xx + kx - pad];
        }
      }
    }
  }
}

void col2im(const std::vector<double>& col, int k, Tensor& dx) {
  const int pad = k / 2;
  const std::size_t hw = dx.plane();
  std::size_t row = 0;
  for (int c = 0; c < dx.c; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx, ++row) {
        const double* src = col.data() + row * hw;
        for (int y = 0; y < dx.h; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= dx.h) continue;
          double* d = dx.data.data() + c * hw + static_cast<std::size_t>(sy) * dx.w;
          const double* s = src + static_cast<std::size_t>(y) * dx.w;
          const int x0 = std::max(0, pad - kx);
          const int x1 = std::min(dx.w, dx.w + pad - kx);
          for (int xx = x0; xx < x1; ++xx) d[xx + kx - pad] += s[xx];
        }
      }
    }
  }
}

// y = W * col + b, where col is (in * k * k) x (h * w).
void conv_forward(const Conv2d& conv, const std::vector<double>& col, int h, int w, Tensor& y) {
  y.resize(conv.out_channels, h, w);
  const long kk = static_cast<long>(conv.in_channels) * conv.kernel * conv.kernel;
  const long hw = static_cast<long>(h) * w;
  ConstMapMatrix wm(conv.weight.data(), conv.out_channels, kk);
  ConstMapMatrix cm(col.data(), kk, hw);
  MapMatrix ym(y.data.data(), conv.out_channels, hw);
  ym.noalias() = wm * cm;
  for (int o = 0; o < conv.out_channels; ++o) ym.row(o).array() += conv.bias[o];
}

void conv_backward(const Conv2d& conv, const std::vector<double>& col, const Tensor& dy,
                   std::vector<double>* dcol, std::vector<double>* dw, std::vector<double>* db) {
  const long kk = static_cast<long>(conv.in_channels) * conv.kernel * conv.kernel;
  const long hw = static_cast<long>(dy.plane());
  ConstMapMatrix dym(dy.data.data(), conv.out_channels, hw);
  if (dw != nullptr) {
    ConstMapMatrix cm(col.data(), kk, hw);
    MapMatrix dwm(dw->data(), conv.out_channels, kk);
    dwm.noalias() += dym * cm.transpose();
    // Plain loop: Eigen's vectorized sum order depends on buffer alignment,
    // which would make training depend on allocation addresses.
    for (int o = 0; o < conv.out_channels; ++o) {
      const double* row = dy.data.data() + o * hw;
      double sum = 0.0;
      for (long i = 0; i < hw; ++i) sum += row[i];
      (*db)[o] += sum;
    }
  }
  if (dcol != nullptr) {
    dcol->assign(static_cast<std::size_t>(kk * hw), 0.0);
    ConstMapMatrix wm(conv.weight.data(), conv.out_channels, kk);
    MapMatrix dcm(dcol->data(), kk, hw);
    dcm.noalias() = wm.transpose() * dym;
  }
}

// Squareplus, (x + sqrt(x^2 + 1)) / 2: a smooth ReLU that needs only a sqrt.
void activation_forward(const Tensor& a, Tensor& s) {
  s.resize(a.c, a.h, a.w);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double x = a.data[i];
    s.data[i] = 0.5 * (x + std::sqrt(x * x + 1.0));
  }
}

// In-place: d holds dL/ds on entry, dL/da on exit.
void activation_backward(const Tensor& a, Tensor& d) {
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double x = a.data[i];
    d.data[i] *= 0.5 * (1.0 + x / std::sqrt(x * x + 1.0));
  }
}

void pool_forward(const Tensor& x, Tensor& y) {
  y.resize(x.c, x.h / 2, x.w / 2);
  for (int c = 0; c < x.c; ++c) {
    for (int yy = 0; yy < y.h; ++yy) {
      for (int xx = 0; xx < y.w; ++xx) {
        y.at(c, yy, xx) = 0.25 * (x.at(c, 2 * yy, 2 * xx) + x.at(c, 2 * yy, 2 * xx + 1) +
                                  x.at(c, 2 * yy + 1, 2 * xx) + x.at(c, 2 * yy + 1, 2 * xx + 1));
      }
    }
  }
}

void pool_backward(const Tensor& dy, Tensor& dx, int c, int h, int w) {
  dx.resize(c, h, w);
  for (int ch = 0; ch < c; ++ch) {
    for (int yy = 0; yy < dy.h; ++yy) {
      for (int xx = 0; xx < dy.w; ++xx) {
        const double g = 0.25 * dy.at(ch, yy, xx);
        dx.at(ch, 2 * yy, 2 * xx) += g;
        dx.at(ch, 2 * yy, 2 * xx + 1) += g;
        dx.at(ch, 2 * yy + 1, 2 * xx) += g;
        dx.at(ch, 2 * yy + 1, 2 * xx + 1) += g;
      }
    }
  }
}

Tensor as_tensor(const std::vector<double>& flat, int c, int h, int w) {
  Tensor t;
  t.c = c;
  t.h = h;
  t.w = w;
  t.data = flat;
  return t;
}

}  // namespace

BoundingBox Network::cell_box(const Tensor& out, int gy, int gx) const {
  const double stride = shape_.stride;
  const double limit = shape_.input_size;
  const double cx = (gx + 0.5 + kReach * (2.0 * sigmoid(out.at(HeadLayout::kTx, gy, gx)) - 1.0)) * stride;
  const double cy = (gy + 0.5 + kReach * (2.0 * sigmoid(out.at(HeadLayout::kTy, gy, gx)) - 1.0)) * stride;
  const double w = shape_.anchor * std::exp(std::clamp(out.at(HeadLayout::kTw, gy, gx), -6.0, 6.0));
  const double h = shape_.anchor * std::exp(std::clamp(out.at(HeadLayout::kTh, gy, gx), -6.0, 6.0));
  return {std::clamp(cx - w / 2, 0.0, limit), std::clamp(cy - h / 2, 0.0, limit),
          std::clamp(cx + w / 2, 0.0, limit), std::clamp(cy + h / 2, 0.0, limit)};
}

void Conv2d::init(int in, int out, int k, std::mt19937_64& rng) {
  in_channels = in;
  out_channels = out;
  kernel = k;
  const double fan_in = static_cast<double>(in) * k * k;
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  weight.resize(static_cast<std::size_t>(out) * in * k * k);
  for (auto& v : weight) v = dist(rng);
  bias.assign(out, 0.0);
}

Network::Network(const NetworkShape& shape, std::uint64_t seed) : shape_(shape) {
  std::mt19937_64 rng(seed);
  conv1_.init(3, shape.width1, 3, rng);
  conv2_.init(shape.width1, shape.width2, 3, rng);
  conv3_.init(shape.width2, shape.width3, 3, rng);
  head_.init(shape.width3, HeadLayout::kClassBase + shape.num_classes, 1, rng);
  for (auto& v : head_.weight) v *= 0.1;
  // Start with low objectness so early training is not swamped by negatives.
  head_.bias[HeadLayout::kObj] = -4.0;
}

void Network::forward(std::span<const double> image, Activations& act) const {
  const int s = shape_.input_size;
  act.input.resize(3, s, s);
  for (std::size_t i = 0; i < act.input.data.size(); ++i) act.input.data[i] = image[i] - 0.5;

  im2col(act.input, 3, act.col1);
  conv_forward(conv1_, act.col1, s, s, act.a1);
  activation_forward(act.a1, act.s1);
  pool_forward(act.s1, act.p1);

  im2col(act.p1, 3, act.col2);
  conv_forward(conv2_, act.col2, act.p1.h, act.p1.w, act.a2);
  activation_forward(act.a2, act.s2);
  pool_forward(act.s2, act.p2);

  im2col(act.p2, 3, act.col3);
  conv_forward(conv3_, act.col3, act.p2.h, act.p2.w, act.a3);
  activation_forward(act.a3, act.s3);

  conv_forward(head_, act.s3.data, act.s3.h, act.s3.w, act.out);
}

LossBreakdown Network::loss(const Tensor& out, std::span<const Target> targets,
                            Tensor* d_out) const {
  const int g = out.h;
  const double stride = shape_.stride;
  const int k = shape_.num_classes;
  if (d_out != nullptr) d_out->resize(out.c, out.h, out.w);

  // Every cell whose centre lies within kReach cells of a target centre (per
  // axis) predicts that target; the nearest centre wins a contested cell.
  std::vector<int> owner(static_cast<std::size_t>(g) * g, -1);
  std::vector<double> owner_dist(owner.size(), 0.0);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double cx = 0.5 * (targets[i].box.x_min + targets[i].box.x_max) / stride;
    const double cy = 0.5 * (targets[i].box.y_min + targets[i].box.y_max) / stride;
    for (int gy = 0; gy < g; ++gy) {
      for (int gx = 0; gx < g; ++gx) {
        const double dx = cx - (gx + 0.5);
        const double dy = cy - (gy + 0.5);
        if (std::abs(dx) >= kReach || std::abs(dy) >= kReach) continue;
        const double d = dx * dx + dy * dy;
        const std::size_t cell = static_cast<std::size_t>(gy) * g + gx;
        if (owner[cell] < 0 || d < owner_dist[cell]) {
          owner[cell] = static_cast<int>(i);
          owner_dist[cell] = d;
        }
      }
    }
  }

  auto overlaps_target = [&](int gy, int gx) {
    const BoundingBox pred = cell_box(out, gy, gx);
    return std::any_of(targets.begin(), targets.end(),
                       [&](const Target& t) { return iou(pred, t.box) > shape_.ignore_iou; });
  };

  double loc = 0.0;
  double obj = 0.0;
  double cls = 0.0;
  for (int gy = 0; gy < g; ++gy) {
    for (int gx = 0; gx < g; ++gx) {
      const double t_obj = out.at(HeadLayout::kObj, gy, gx);
      const int o = owner[static_cast<std::size_t>(gy) * g + gx];
      if (o < 0) {
        // A near-duplicate of a target box is neither rewarded nor penalized.
        if (overlaps_target(gy, gx)) continue;
        obj += shape_.noobj_weight * softplus(t_obj);
        if (d_out != nullptr) d_out->at(HeadLayout::kObj, gy, gx) = shape_.noobj_weight * sigmoid(t_obj);
        continue;
      }
      const Target& t = targets[static_cast<std::size_t>(o)];
      obj += softplus(-t_obj);

      // Offsets are regressed in sigmoid space: centre = cell centre +
      // kReach * (2 s - 1) cells.
      const double cx = 0.5 * (t.box.x_min + t.box.x_max) / stride;
      const double cy = 0.5 * (t.box.y_min + t.box.y_max) / stride;
      const double ox = 0.5 * ((cx - (gx + 0.5)) / kReach + 1.0);
      const double oy = 0.5 * ((cy - (gy + 0.5)) / kReach + 1.0);
      const double tw = std::log(std::max(t.box.width(), 1e-3) / shape_.anchor);
      const double th = std::log(std::max(t.box.height(), 1e-3) / shape_.anchor);
      const double sx = sigmoid(out.at(HeadLayout::kTx, gy, gx));
      const double sy = sigmoid(out.at(HeadLayout::kTy, gy, gx));
      const double rw = out.at(HeadLayout::kTw, gy, gx) - tw;
      const double rh = out.at(HeadLayout::kTh, gy, gx) - th;
      loc += (sx - ox) * (sx - ox) + (sy - oy) * (sy - oy) + rw * rw + rh * rh;

      // Softmax cross-entropy over the class logits of this cell.
      double mx = -1e300;
      for (int c = 0; c < k; ++c) mx = std::max(mx, out.at(HeadLayout::kClassBase + c, gy, gx));
      double z = 0.0;
      for (int c = 0; c < k; ++c) z += std::exp(out.at(HeadLayout::kClassBase + c, gy, gx) - mx);
      const double log_z = mx + std::log(z);
      cls += log_z - out.at(HeadLayout::kClassBase + t.class_id, gy, gx);

      if (d_out != nullptr) {
        d_out->at(HeadLayout::kObj, gy, gx) = sigmoid(t_obj) - 1.0;
        d_out->at(HeadLayout::kTx, gy, gx) = 2.0 * (sx - ox) * sx * (1.0 - sx);
        d_out->at(HeadLayout::kTy, gy, gx) = 2.0 * (sy - oy) * sy * (1.0 - sy);
        d_out->at(HeadLayout::kTw, gy, gx) = 2.0 * rw;
        d_out->at(HeadLayout::kTh, gy, gx) = 2.0 * rh;
        for (int c = 0; c < k; ++c) {
          const double p = std::exp(out.at(HeadLayout::kClassBase + c, gy, gx) - log_z);
          d_out->at(HeadLayout::kClassBase + c, gy, gx) = p - (c == t.class_id ? 1.0 : 0.0);
        }
      }
    }
  }
  return LossBreakdown::from_parts(loc, obj, cls);
}

void Network::backward(const Activations& act, const Tensor& d_out, std::vector<double>* d_input,
                       ParamGrads* grads) const {
  auto slot = [&](int i) -> std::vector<double>* {
    return grads != nullptr ? &grads->grads[static_cast<std::size_t>(i)] : nullptr;
  };
  std::vector<double> dcol;

  conv_backward(head_, act.s3.data, d_out, &dcol, slot(6), slot(7));
  Tensor d3 = as_tensor(dcol, act.s3.c, act.s3.h, act.s3.w);
  activation_backward(act.a3, d3);
  conv_backward(conv3_, act.col3, d3, &dcol, slot(4), slot(5));
  Tensor dp2;
  dp2.resize(act.p2.c, act.p2.h, act.p2.w);
  col2im(dcol, 3, dp2);

  Tensor d2;
  pool_backward(dp2, d2, act.s2.c, act.s2.h, act.s2.w);
  activation_backward(act.a2, d2);
  conv_backward(conv2_, act.col2, d2, &dcol, slot(2), slot(3));
  Tensor dp1;
  dp1.resize(act.p1.c, act.p1.h, act.p1.w);
  col2im(dcol, 3, dp1);

  Tensor d1;
  pool_backward(dp1, d1, act.s1.c, act.s1.h, act.s1.w);
  activation_backward(act.a1, d1);
  conv_backward(conv1_, act.col1, d1, d_input != nullptr ? &dcol : nullptr, slot(0), slot(1));
  if (d_input != nullptr) {
    Tensor dx;
    dx.resize(3, act.input.h, act.input.w);
    col2im(dcol, 3, dx);
    *d_input = std::move(dx.data);
  }
}

std::vector<Candidate> Network::decode(const Tensor& out, double threshold) const {
  std::vector<Candidate> found;
  const int g = out.h;
  const int k = shape_.num_classes;
  for (int gy = 0; gy < g; ++gy) {
    for (int gx = 0; gx < g; ++gx) {
      const double obj = sigmoid(out.at(HeadLayout::kObj, gy, gx));
      double mx = -1e300;
      int best = 0;
      for (int c = 0; c < k; ++c) {
        const double v = out.at(HeadLayout::kClassBase + c, gy, gx);
        if (v > mx) {
          mx = v;
          best = c;
        }
      }
      double z = 0.0;
      for (int c = 0; c < k; ++c) z += std::exp(out.at(HeadLayout::kClassBase + c, gy, gx) - mx);
      const double conf = std::clamp(obj / z, 0.0, 1.0);
      if (conf < threshold) continue;
      const BoundingBox box = cell_box(out, gy, gx);
      if (!box.valid()) continue;
      found.push_back({box, best, conf});
    }
  }
  return found;
}

std::vector<std::vector<double>*> Network::parameters() {
  return {&conv1_.weight, &conv1_.bias, &conv2_.weight, &conv2_.bias,
          &conv3_.weight, &conv3_.bias, &head_.weight,  &head_.bias};
}

std::vector<const std::vector<double>*> Network::parameters() const {
  return {&conv1_.weight, &conv1_.bias, &conv2_.weight, &conv2_.bias,
          &conv3_.weight, &conv3_.bias, &head_.weight,  &head_.bias};
}

ParamGrads Network::zero_grads() const {
  ParamGrads g;
  for (const auto* p : parameters()) g.grads.emplace_back(p->size(), 0.0);
  return g;
}

namespace {

constexpr char kMagic[8] = {'A', 'D', 'V', 'T', 'O', 'Y', '2', '\n'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw Error(Errc::parse, "toy weights: truncated file");
  }
  return v;
}

}  // namespace

void Network::save(std::ostream& os) const {
  os.write(kMagic, sizeof(kMagic));
  put<std::int32_t>(os, shape_.input_size);
  put<std::int32_t>(os, shape_.width1);
  put<std::int32_t>(os, shape_.width2);
  put<std::int32_t>(os, shape_.width3);
  put<std::int32_t>(os, shape_.num_classes);
  put<std::int32_t>(os, shape_.stride);
  put<double>(os, shape_.anchor);
  put<double>(os, shape_.noobj_weight);
  put<double>(os, shape_.ignore_iou);
  for (const auto* p : parameters()) {
    put<std::uint64_t>(os, p->size());
    os.write(reinterpret_cast<const char*>(p->data()),
             static_cast<std::streamsize>(p->size() * sizeof(double)));
  }
}

Network Network::load(std::istream& is) {
  char magic[sizeof(kMagic)] = {};
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(Errc::parse, "toy weights: bad header");
  }
  NetworkShape shape;
  shape.input_size = get<std::int32_t>(is);
  shape.width1 = get<std::int32_t>(is);
  shape.width2 = get<std::int32_t>(is);
  shape.width3 = get<std::int32_t>(is);
  shape.num_classes = get<std::int32_t>(is);
  shape.stride = get<std::int32_t>(is);
  shape.anchor = get<double>(is);
  shape.noobj_weight = get<double>(is);
  shape.ignore_iou = get<double>(is);
  Network net(shape, 0);
  for (auto* p : net.parameters()) {
    const auto n = get<std::uint64_t>(is);
    if (n != p->size()) throw Error(Errc::parse, "toy weights: parameter size mismatch");
    if (!is.read(reinterpret_cast<char*>(p->data()), static_cast<std::streamsize>(n * sizeof(double)))) {
      throw Error(Errc::parse, "toy weights: truncated file");
    }
  }
  return net;
}

bool Network::operator==(const Network& other) const {
  const auto a = parameters();
  const auto b = other.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]->size() != b[i]->size()) return false;
    if (std::memcmp(a[i]->data(), b[i]->data(), a[i]->size() * sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace advdet::toy
