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

#include <Eigen/Core>

#include <string>

namespace lucid {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using IndexMatrix = Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic>;

/// Stack of 2-D maps stored one per row; spatial index p = row * width + col.
/// Feature maps with K*M channels use channel index c = k * M + m.
template <typename Scalar>
struct MapStack {
  int height = 0;
  int width = 0;
  Matrix<Scalar> maps;  // channels x (height * width)

  MapStack() = default;
  MapStack(int channels, int h, int w)
      : height(h), width(w), maps(Matrix<Scalar>::Zero(channels, static_cast<Eigen::Index>(h) * w)) {}

  int channels() const { return static_cast<int>(maps.rows()); }
  Eigen::Index cells() const { return static_cast<Eigen::Index>(height) * width; }
  Scalar& at(int c, int row, int col) { return maps(c, static_cast<Eigen::Index>(row) * width + col); }
  Scalar at(int c, int row, int col) const { return maps(c, static_cast<Eigen::Index>(row) * width + col); }
};

/// RGB raster with values in [0,1], channel-major; pixel p = y * width + x.
template <typename Scalar>
struct Image {
  int height = 0;
  int width = 0;
  Matrix<Scalar> data;  // 3 x (height * width)

  Image() = default;
  Image(int h, int w) : height(h), width(w), data(Matrix<Scalar>::Zero(3, static_cast<Eigen::Index>(h) * w)) {}

  Eigen::Index pixels() const { return static_cast<Eigen::Index>(height) * width; }
  Scalar& at(int channel, int y, int x) { return data(channel, static_cast<Eigen::Index>(y) * width + x); }
  Scalar at(int channel, int y, int x) const { return data(channel, static_cast<Eigen::Index>(y) * width + x); }
};

template <typename Scalar>
struct ImageSample {
  Image<Scalar> image;
  int label = 0;
  std::string id;
};

/// First index of the row maximum, scanning in row-major spatial order, so
/// ties resolve to the smallest (row, col) pair.
template <typename Derived>
Eigen::Index argmax_row_major(const Eigen::MatrixBase<Derived>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index p = 1; p < row.size(); ++p) {
    if (row(p) > row(best)) best = p;
  }
  return best;
}

}  // namespace lucid
