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

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "lucid/rng.hpp"
#include "lucid/types.hpp"

namespace lucid {

enum class ParamGroup { kShapeTexBackbone, kShapeTexHead, kColorNet };

/// Flat view over one parameter tensor and its gradient accumulator.
template <typename Scalar>
struct ParamView {
  std::string name;
  Scalar* value = nullptr;
  Scalar* grad = nullptr;
  Eigen::Index size = 0;
  ParamGroup group = ParamGroup::kShapeTexHead;
};

// Activations ---------------------------------------------------------------

template <typename Scalar>
Scalar gelu(Scalar x) {
  return Scalar(0.5) * x * std::erfc(-x * Scalar(std::numbers::sqrt2 / 2.0));
}

template <typename Scalar>
Scalar gelu_grad(Scalar x) {
  const Scalar phi = std::exp(Scalar(-0.5) * x * x) * Scalar(1.0 / std::sqrt(2.0 * std::numbers::pi));
  const Scalar cdf = Scalar(0.5) * std::erfc(-x * Scalar(std::numbers::sqrt2 / 2.0));
  return cdf + x * phi;
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return x >= Scalar(0) ? Scalar(1) / (Scalar(1) + std::exp(-x))
                        : std::exp(x) / (Scalar(1) + std::exp(x));
}

// Per-pixel linear map (1x1 convolution) ------------------------------------

template <typename Scalar>
struct PixelDense {
  Matrix<Scalar> weight;  // out x in
  Vector<Scalar> bias;
  Matrix<Scalar> weight_grad;
  Vector<Scalar> bias_grad;

  void init(int in, int out, Rng& rng) {
    weight.resize(out, in);
    const Scalar scale = std::sqrt(Scalar(2) / Scalar(in));
    for (Eigen::Index j = 0; j < weight.cols(); ++j)
      for (Eigen::Index i = 0; i < weight.rows(); ++i) weight(i, j) = scale * Scalar(rng.normal());
    bias = Vector<Scalar>::Zero(out);
    zero_grad();
  }

  void zero_grad() {
    weight_grad = Matrix<Scalar>::Zero(weight.rows(), weight.cols());
    bias_grad = Vector<Scalar>::Zero(bias.size());
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x) const {
    if (x.rows() != weight.cols()) throw std::invalid_argument("PixelDense: channel mismatch");
    return (weight * x).colwise() + bias;
  }

  /// Accumulates parameter gradients; returns the gradient w.r.t. the input.
  Matrix<Scalar> backward(const Matrix<Scalar>& x, const Matrix<Scalar>& grad_out) {
    weight_grad.noalias() += grad_out * x.transpose();
    bias_grad.noalias() += grad_out.rowwise().sum();
    return weight.transpose() * grad_out;
  }

  void collect(const std::string& prefix, ParamGroup group, std::vector<ParamView<Scalar>>& out) {
    out.push_back({prefix + ".weight", weight.data(), weight_grad.data(), weight.size(), group});
    out.push_back({prefix + ".bias", bias.data(), bias_grad.data(), bias.size(), group});
  }
};

// 2-D convolution ------------------------------------------------------------

template <typename Scalar>
struct Conv2d {
  int in_channels = 0, out_channels = 0, kernel = 3, stride = 1, padding = 1;
  Matrix<Scalar> weight;  // out x (in * kernel * kernel)
  Vector<Scalar> bias;
  Matrix<Scalar> weight_grad;
  Vector<Scalar> bias_grad;

  void init(int in, int out, int k, int s, int p, Rng& rng) {
    in_channels = in;
    out_channels = out;
    kernel = k;
    stride = s;
    padding = p;
    weight.resize(out, static_cast<Eigen::Index>(in) * k * k);
    const Scalar scale = std::sqrt(Scalar(2) / Scalar(in * k * k));
    for (Eigen::Index j = 0; j < weight.cols(); ++j)
      for (Eigen::Index i = 0; i < weight.rows(); ++i) weight(i, j) = scale * Scalar(rng.normal());
    bias = Vector<Scalar>::Zero(out);
    zero_grad();
  }

  void zero_grad() {
    weight_grad = Matrix<Scalar>::Zero(weight.rows(), weight.cols());
    bias_grad = Vector<Scalar>::Zero(bias.size());
  }

  int out_size(int in_size) const { return (in_size + 2 * padding - kernel) / stride + 1; }

  /// Patch matrix: rows index (channel, ky, kx), columns index output cells.
  Matrix<Scalar> im2col(const MapStack<Scalar>& x) const {
    const int oh = out_size(x.height), ow = out_size(x.width);
    Matrix<Scalar> col = Matrix<Scalar>::Zero(weight.cols(), static_cast<Eigen::Index>(oh) * ow);
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const Eigen::Index p = static_cast<Eigen::Index>(oy) * ow + ox;
        for (int ky = 0; ky < kernel; ++ky) {
          const int iy = oy * stride - padding + ky;
          if (iy < 0 || iy >= x.height) continue;
          for (int kx = 0; kx < kernel; ++kx) {
            const int ix = ox * stride - padding + kx;
            if (ix < 0 || ix >= x.width) continue;
            for (int c = 0; c < in_channels; ++c)
              col((static_cast<Eigen::Index>(c) * kernel + ky) * kernel + kx, p) = x.at(c, iy, ix);
          }
        }
      }
    }
    return col;
  }

  MapStack<Scalar> forward(const MapStack<Scalar>& x, Matrix<Scalar>& col_cache) const {
    if (x.channels() != in_channels) throw std::invalid_argument("Conv2d: channel mismatch");
    col_cache = im2col(x);
    MapStack<Scalar> y(out_channels, out_size(x.height), out_size(x.width));
    y.maps.noalias() = weight * col_cache;
    y.maps.colwise() += bias;
    return y;
  }

  /// Accumulates parameter gradients; optionally scatters the input gradient
  /// (skipped for the first layer or below a frozen boundary).
  MapStack<Scalar> backward(const Matrix<Scalar>& col_cache, const MapStack<Scalar>& grad_out,
                            int in_height, int in_width, bool need_input_grad = true) {
    weight_grad.noalias() += grad_out.maps * col_cache.transpose();
    bias_grad.noalias() += grad_out.maps.rowwise().sum();
    MapStack<Scalar> grad_in(in_channels, in_height, in_width);
    if (!need_input_grad) return grad_in;
    const Matrix<Scalar> dcol = weight.transpose() * grad_out.maps;
    const int ow = grad_out.width;
    for (int oy = 0; oy < grad_out.height; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const Eigen::Index p = static_cast<Eigen::Index>(oy) * ow + ox;
        for (int ky = 0; ky < kernel; ++ky) {
          const int iy = oy * stride - padding + ky;
          if (iy < 0 || iy >= in_height) continue;
          for (int kx = 0; kx < kernel; ++kx) {
            const int ix = ox * stride - padding + kx;
            if (ix < 0 || ix >= in_width) continue;
            for (int c = 0; c < in_channels; ++c)
              grad_in.at(c, iy, ix) += dcol((static_cast<Eigen::Index>(c) * kernel + ky) * kernel + kx, p);
          }
        }
      }
    }
    return grad_in;
  }

  void collect(const std::string& prefix, ParamGroup group, std::vector<ParamView<Scalar>>& out) {
    out.push_back({prefix + ".weight", weight.data(), weight_grad.data(), weight.size(), group});
    out.push_back({prefix + ".bias", bias.data(), bias_grad.data(), bias.size(), group});
  }
};

// Layer normalization over channels at every spatial position ----------------

template <typename Scalar>
struct ChannelNorm {
  Vector<Scalar> gamma, beta;
  Vector<Scalar> gamma_grad, beta_grad;
  Scalar eps = Scalar(1e-5);

  void init(int channels) {
    gamma = Vector<Scalar>::Ones(channels);
    beta = Vector<Scalar>::Zero(channels);
    zero_grad();
  }

  void zero_grad() {
    gamma_grad = Vector<Scalar>::Zero(gamma.size());
    beta_grad = Vector<Scalar>::Zero(beta.size());
  }

  struct Cache {
    Matrix<Scalar> xhat;          // channels x cells
    Vector<Scalar> inv_std;       // cells
  };

  Matrix<Scalar> forward(const Matrix<Scalar>& x, Cache& cache) const {
    const Eigen::Index c = x.rows();
    cache.xhat.resize(x.rows(), x.cols());
    cache.inv_std.resize(x.cols());
    Matrix<Scalar> y(x.rows(), x.cols());
    for (Eigen::Index p = 0; p < x.cols(); ++p) {
      const Scalar mean = x.col(p).mean();
      const Scalar var = (x.col(p).array() - mean).square().sum() / Scalar(c);
      const Scalar inv = Scalar(1) / std::sqrt(var + eps);
      cache.inv_std(p) = inv;
      cache.xhat.col(p) = (x.col(p).array() - mean) * inv;
      y.col(p) = cache.xhat.col(p).cwiseProduct(gamma) + beta;
    }
    return y;
  }

  Matrix<Scalar> backward(const Cache& cache, const Matrix<Scalar>& grad_out) {
    const Eigen::Index c = cache.xhat.rows();
    Matrix<Scalar> grad_in(cache.xhat.rows(), cache.xhat.cols());
    for (Eigen::Index p = 0; p < cache.xhat.cols(); ++p) {
      const auto dy = grad_out.col(p);
      gamma_grad += dy.cwiseProduct(cache.xhat.col(p));
      beta_grad += dy;
      const Vector<Scalar> dxhat = dy.cwiseProduct(gamma);
      const Scalar m1 = dxhat.mean();
      const Scalar m2 = dxhat.cwiseProduct(cache.xhat.col(p)).mean();
      grad_in.col(p) =
          cache.inv_std(p) * (dxhat.array() - m1 - cache.xhat.col(p).array() * m2).matrix();
    }
    return grad_in;
  }

  void collect(const std::string& prefix, ParamGroup group, std::vector<ParamView<Scalar>>& out) {
    out.push_back({prefix + ".gamma", gamma.data(), gamma_grad.data(), gamma.size(), group});
    out.push_back({prefix + ".beta", beta.data(), beta_grad.data(), beta.size(), group});
  }
};

}  // namespace lucid
