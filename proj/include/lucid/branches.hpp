// Copyright 2026 The LucidPPN Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "lucid/layers.hpp"
#include "lucid/types.hpp"

namespace lucid {

// Feature maps carry K*M channels, channel c = k * M + m. Resemblances are
// global spatial maxima; tied maxima resolve to the smallest (row, col).

/// Max-reduce every (k, m) map; also records the winning spatial index.
template <typename Scalar>
void max_reduce(const MapStack<Scalar>& z, int parts, int classes, Matrix<Scalar>& resemblance,
                IndexMatrix& argmax) {
  resemblance.resize(parts, classes);
  argmax.resize(parts, classes);
  for (int k = 0; k < parts; ++k)
    for (int m = 0; m < classes; ++m) {
      const Eigen::Index c = static_cast<Eigen::Index>(k) * classes + m;
      const Eigen::Index p = argmax_row_major(z.maps.row(c));
      argmax(k, m) = p;
      resemblance(k, m) = z.maps(c, p);
    }
}

/// Location of the (k, m) map maximum as (row, col); ties break to the
/// smallest pair lexicographically.
template <typename Scalar>
std::array<int, 2> resemblance_argmax(const MapStack<Scalar>& z, int k, int m, int classes) {
  const Eigen::Index c = static_cast<Eigen::Index>(k) * classes + m;
  const Eigen::Index p = argmax_row_major(z.maps.row(c));
  return {static_cast<int>(p) / z.width, static_cast<int>(p) % z.width};
}

// ShapeTexNet ----------------------------------------------------------------

struct BackboneConfig {
  std::vector<int> channels{16, 32, 64, 64};
  std::vector<int> strides{2, 2, 2, 1};
  int kernel = 3;

  int reduction() const {
    int r = 1;
    for (int s : strides) r *= s;
    return r;
  }
};

template <typename Scalar>
struct ShapeTexTrace {
  std::vector<Matrix<Scalar>> cols;
  std::vector<typename ChannelNorm<Scalar>::Cache> norm_caches;
  std::vector<Matrix<Scalar>> pre_activation;  // normalized values before GELU
  std::vector<std::array<int, 2>> in_dims;     // conv input (h, w) per block
  std::vector<std::array<int, 2>> out_dims;
  Matrix<Scalar> backbone_out;  // D x cells
  Matrix<Scalar> z;             // K*M x cells, post sigmoid
  int feat_height = 0, feat_width = 0;
};

template <typename Scalar>
struct ShapeTexOutputs {
  MapStack<Scalar> z;             // K*M maps
  Matrix<Scalar> resemblance;     // K x M
  Vector<Scalar> class_scores;    // M, mean resemblance over parts
  IndexMatrix argmax;             // K x M
};

/// Grayscale branch: a strided conv backbone followed by a 1x1 projection to
/// one channel per prototype, squashed by a sigmoid.
template <typename Scalar>
struct ShapeTexNet {
  int parts = 0, classes = 0;
  BackboneConfig config;
  std::vector<Conv2d<Scalar>> convs;
  std::vector<ChannelNorm<Scalar>> norms;
  PixelDense<Scalar> projection;

  void init(int k_parts, int m_classes, const BackboneConfig& cfg, Rng& rng) {
    parts = k_parts;
    classes = m_classes;
    config = cfg;
    convs.resize(cfg.channels.size());
    norms.resize(cfg.channels.size());
    int in = 3;
    for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
      convs[i].init(in, cfg.channels[i], cfg.kernel, cfg.strides[i], cfg.kernel / 2, rng);
      norms[i].init(cfg.channels[i]);
      in = cfg.channels[i];
    }
    projection.init(in, parts * classes, rng);
  }

  ShapeTexOutputs<Scalar> forward(const Image<Scalar>& x, ShapeTexTrace<Scalar>* trace = nullptr) const {
    ShapeTexTrace<Scalar> local;
    ShapeTexTrace<Scalar>& t = trace ? *trace : local;
    const std::size_t n = convs.size();
    t.cols.resize(n);
    t.norm_caches.resize(n);
    t.pre_activation.resize(n);
    t.in_dims.resize(n);
    t.out_dims.resize(n);

    MapStack<Scalar> h;
    h.height = x.height;
    h.width = x.width;
    h.maps = x.data;
    for (std::size_t i = 0; i < n; ++i) {
      t.in_dims[i] = {h.height, h.width};
      MapStack<Scalar> y = convs[i].forward(h, t.cols[i]);
      t.out_dims[i] = {y.height, y.width};
      y.maps = norms[i].forward(y.maps, t.norm_caches[i]);
      t.pre_activation[i] = y.maps;
      y.maps = y.maps.unaryExpr([](Scalar v) { return gelu(v); });
      h = std::move(y);
    }
    t.backbone_out = h.maps;
    t.feat_height = h.height;
    t.feat_width = h.width;

    ShapeTexOutputs<Scalar> out;
    out.z.height = h.height;
    out.z.width = h.width;
    out.z.maps = projection.forward(h.maps).unaryExpr([](Scalar v) { return sigmoid(v); });
    t.z = out.z.maps;
    max_reduce(out.z, parts, classes, out.resemblance, out.argmax);
    out.class_scores = out.resemblance.colwise().mean().transpose();
    return out;
  }

  /// dz is the gradient w.r.t. the sigmoid output. Backbone gradients are
  /// skipped while the backbone is frozen.
  void backward(const ShapeTexTrace<Scalar>& trace, const Matrix<Scalar>& dz, bool into_backbone) {
    const Matrix<Scalar> da =
        dz.cwiseProduct(trace.z.cwiseProduct((Matrix<Scalar>::Ones(trace.z.rows(), trace.z.cols()) - trace.z)));
    Matrix<Scalar> grad = projection.backward(trace.backbone_out, da);
    if (!into_backbone) return;
    MapStack<Scalar> g;
    g.height = trace.feat_height;
    g.width = trace.feat_width;
    g.maps = std::move(grad);
    for (int i = static_cast<int>(convs.size()) - 1; i >= 0; --i) {
      g.maps = g.maps.cwiseProduct(trace.pre_activation[i].unaryExpr([](Scalar v) { return gelu_grad(v); }));
      g.maps = norms[i].backward(trace.norm_caches[i], g.maps);
      g = convs[i].backward(trace.cols[i], g, trace.in_dims[i][0], trace.in_dims[i][1], i > 0);
    }
  }

  void zero_grad() {
    for (auto& c : convs) c.zero_grad();
    for (auto& nrm : norms) nrm.zero_grad();
    projection.zero_grad();
  }

  void collect(std::vector<ParamView<Scalar>>& out) {
    for (std::size_t i = 0; i < convs.size(); ++i) {
      const std::string prefix = "shapetex.block" + std::to_string(i);
      convs[i].collect(prefix + ".conv", ParamGroup::kShapeTexBackbone, out);
      norms[i].collect(prefix + ".norm", ParamGroup::kShapeTexBackbone, out);
    }
    projection.collect("shapetex.projection", ParamGroup::kShapeTexHead, out);
  }
};

// ColorNet --------------------------------------------------------------------

struct ColorNetConfig {
  std::vector<int> hidden{20, 50, 150, 200, 600};
};

template <typename Scalar>
struct ColorTrace {
  std::vector<Matrix<Scalar>> inputs;  // activation entering each layer
  std::vector<Matrix<Scalar>> pre;     // pre-activation of each layer
  Matrix<Scalar> z;                    // sigmoid output
};

template <typename Scalar>
struct ColorOutputs {
  MapStack<Scalar> z;
  Matrix<Scalar> resemblance;
  IndexMatrix argmax;
};

/// Color branch: a stack of per-pixel linear layers (1x1 convolutions) with
/// ReLU between and a sigmoid at the end. No spatial mixing whatsoever.
template <typename Scalar>
struct ColorNet {
  int parts = 0, classes = 0;
  std::vector<PixelDense<Scalar>> layers;

  void init(int k_parts, int m_classes, const ColorNetConfig& cfg, Rng& rng) {
    parts = k_parts;
    classes = m_classes;
    layers.resize(cfg.hidden.size() + 1);
    int in = 3;
    for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
      layers[i].init(in, cfg.hidden[i], rng);
      in = cfg.hidden[i];
    }
    layers.back().init(in, parts * classes, rng);
  }

  /// Columns of `pixels` are independent; any pixel count works.
  Matrix<Scalar> forward_pixels(const Matrix<Scalar>& pixels, ColorTrace<Scalar>* trace = nullptr) const {
    ColorTrace<Scalar> local;
    ColorTrace<Scalar>& t = trace ? *trace : local;
    t.inputs.resize(layers.size());
    t.pre.resize(layers.size());
    Matrix<Scalar> h = pixels;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      t.inputs[i] = h;
      t.pre[i] = layers[i].forward(h);
      if (i + 1 < layers.size())
        h = t.pre[i].cwiseMax(Scalar(0));
      else
        h = t.pre[i].unaryExpr([](Scalar v) { return sigmoid(v); });
    }
    t.z = h;
    return h;
  }

  ColorOutputs<Scalar> forward(const Image<Scalar>& x, ColorTrace<Scalar>* trace = nullptr) const {
    ColorOutputs<Scalar> out;
    out.z.height = x.height;
    out.z.width = x.width;
    out.z.maps = forward_pixels(x.data, trace);
    max_reduce(out.z, parts, classes, out.resemblance, out.argmax);
    return out;
  }

  /// Resemblance to a single uniform color; equals forward() on a uniform
  /// image reduced by max, since every pixel computes the same value.
  Matrix<Scalar> response(Scalar r, Scalar g, Scalar b) const {
    Matrix<Scalar> pixel(3, 1);
    pixel << r, g, b;
    const Matrix<Scalar> z = forward_pixels(pixel);
    Matrix<Scalar> out(parts, classes);
    for (int k = 0; k < parts; ++k)
      for (int m = 0; m < classes; ++m) out(k, m) = z(static_cast<Eigen::Index>(k) * classes + m, 0);
    return out;
  }

  void backward(const ColorTrace<Scalar>& trace, const Matrix<Scalar>& dz) {
    Matrix<Scalar> da =
        dz.cwiseProduct(trace.z.cwiseProduct((Matrix<Scalar>::Ones(trace.z.rows(), trace.z.cols()) - trace.z)));
    for (int i = static_cast<int>(layers.size()) - 1; i >= 0; --i) {
      Matrix<Scalar> dx = layers[i].backward(trace.inputs[i], da);
      if (i > 0)
        da = dx.cwiseProduct(
            trace.pre[i - 1].unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); }));
    }
  }

  /// Gradient w.r.t. the input pixels (used by gradient checks).
  Matrix<Scalar> input_gradient(const ColorTrace<Scalar>& trace, const Matrix<Scalar>& dz) const {
    Matrix<Scalar> da =
        dz.cwiseProduct(trace.z.cwiseProduct((Matrix<Scalar>::Ones(trace.z.rows(), trace.z.cols()) - trace.z)));
    for (int i = static_cast<int>(layers.size()) - 1; i >= 0; --i) {
      Matrix<Scalar> dx = layers[i].weight.transpose() * da;
      if (i == 0) return dx;
      da = dx.cwiseProduct(
          trace.pre[i - 1].unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); }));
    }
    return da;
  }

  void zero_grad() {
    for (auto& l : layers) l.zero_grad();
  }

  void collect(std::vector<ParamView<Scalar>>& out) {
    for (std::size_t i = 0; i < layers.size(); ++i)
      layers[i].collect("colornet.layer" + std::to_string(i), ParamGroup::kColorNet, out);
  }
};

}  // namespace lucid
