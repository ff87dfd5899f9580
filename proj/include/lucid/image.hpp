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

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lucid/color.hpp"
#include "lucid/types.hpp"

namespace lucid {

// Grayscale normalization applied before the shape/texture branch.
inline constexpr double kGrayMean = 0.445;
inline constexpr double kGrayStd = 0.269;

/// Replace every pixel by its luminance, keeping three equal channels.
/// Pixels that are already gray pass through untouched, which makes the
/// conversion an exact projection: applying it twice changes nothing.
template <typename Scalar>
Image<Scalar> to_grayscale(const Image<Scalar>& image) {
  Image<Scalar> out(image.height, image.width);
  for (Eigen::Index p = 0; p < image.pixels(); ++p) {
    const Scalar r = image.data(0, p), g = image.data(1, p), b = image.data(2, p);
    const Scalar w = (r == g && g == b) ? r : luminance(r, g, b);
    out.data(0, p) = w;
    out.data(1, p) = w;
    out.data(2, p) = w;
  }
  return out;
}

/// (v - mean) / std on every channel; used on grayscale model input.
template <typename Scalar>
Image<Scalar> normalize_grayscale(const Image<Scalar>& image) {
  Image<Scalar> out = image;
  out.data = (out.data.array() - Scalar(kGrayMean)) / Scalar(kGrayStd);
  return out;
}

/// Area-averaged downscale to h x w; exact box integration, so constant
/// images stay constant and an identity-size call returns the input.
template <typename Scalar>
Image<Scalar> downscale_color(const Image<Scalar>& image, int h, int w) {
  if (h <= 0 || w <= 0) throw std::invalid_argument("downscale_color: target size must be positive");
  if (h > image.height || w > image.width)
    throw std::invalid_argument("downscale_color: target larger than input");
  if (h == image.height && w == image.width) return image;

  Image<Scalar> out(h, w);
  const double sy = static_cast<double>(image.height) / h;
  const double sx = static_cast<double>(image.width) / w;
  for (int oy = 0; oy < h; ++oy) {
    const double y0 = oy * sy, y1 = (oy + 1) * sy;
    for (int ox = 0; ox < w; ++ox) {
      const double x0 = ox * sx, x1 = (ox + 1) * sx;
      Scalar acc[3] = {0, 0, 0};
      double area = 0.0;
      for (int iy = static_cast<int>(std::floor(y0)); iy < static_cast<int>(std::ceil(y1)); ++iy) {
        const double wy = std::min<double>(y1, iy + 1) - std::max<double>(y0, iy);
        for (int ix = static_cast<int>(std::floor(x0)); ix < static_cast<int>(std::ceil(x1)); ++ix) {
          const double wx = std::min<double>(x1, ix + 1) - std::max<double>(x0, ix);
          const double weight = wy * wx;
          acc[0] += Scalar(weight) * image.at(0, iy, ix);
          acc[1] += Scalar(weight) * image.at(1, iy, ix);
          acc[2] += Scalar(weight) * image.at(2, iy, ix);
          area += weight;
        }
      }
      for (int c = 0; c < 3; ++c) out.at(c, oy, ox) = acc[c] / Scalar(area);
    }
  }
  return out;
}

template <typename Scalar>
struct HuePerturbResult {
  Image<Scalar> image;
  double clamped_fraction = 0.0;  // pixels where rescaling left [0,1]
};

/// Rotate every pixel's HSV hue by `angle_degrees`, then rescale its RGB
/// channels so the grayscale luminance matches the original, clamping to
/// [0,1] afterwards. Achromatic pixels are fixed points.
template <typename Scalar>
HuePerturbResult<Scalar> hue_perturb(const Image<Scalar>& image, double angle_degrees) {
  HuePerturbResult<Scalar> out;
  out.image = Image<Scalar>(image.height, image.width);
  Eigen::Index clamped = 0;
  for (Eigen::Index p = 0; p < image.pixels(); ++p) {
    const Scalar r = image.data(0, p), g = image.data(1, p), b = image.data(2, p);
    const auto hsv = rgb_to_hsv(r, g, b);
    if (hsv.s <= Scalar(0)) {
      out.image.data(0, p) = r;
      out.image.data(1, p) = g;
      out.image.data(2, p) = b;
      continue;
    }
    auto rgb = hsv_to_rgb(hsv.h + Scalar(angle_degrees), hsv.s, hsv.v);
    const Scalar w0 = luminance(r, g, b);
    const Scalar w1 = luminance(rgb[0], rgb[1], rgb[2]);
    if (w1 > Scalar(0)) {
      const Scalar scale = w0 / w1;
      for (auto& c : rgb) c *= scale;
    }
    bool hit = false;
    for (auto& c : rgb) {
      if (c < Scalar(0) || c > Scalar(1)) hit = true;
      c = std::clamp(c, Scalar(0), Scalar(1));
    }
    if (hit) ++clamped;
    out.image.data(0, p) = rgb[0];
    out.image.data(1, p) = rgb[1];
    out.image.data(2, p) = rgb[2];
  }
  out.clamped_fraction = static_cast<double>(clamped) / static_cast<double>(image.pixels());
  return out;
}

/// Bilinear resize with pixel-center alignment.
template <typename Scalar>
Image<Scalar> resize_bilinear(const Image<Scalar>& image, int h, int w) {
  if (h <= 0 || w <= 0) throw std::invalid_argument("resize_bilinear: target size must be positive");
  if (h == image.height && w == image.width) return image;
  Image<Scalar> out(h, w);
  const double sy = static_cast<double>(image.height) / h;
  const double sx = static_cast<double>(image.width) / w;
  for (int oy = 0; oy < h; ++oy) {
    const double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const Scalar ty = Scalar(fy - y0);
    for (int ox = 0; ox < w; ++ox) {
      const double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const Scalar tx = Scalar(fx - x0);
      for (int c = 0; c < 3; ++c) {
        const Scalar top = (Scalar(1) - tx) * image.at(c, y0, x0) + tx * image.at(c, y0, x1);
        const Scalar bot = (Scalar(1) - tx) * image.at(c, y1, x0) + tx * image.at(c, y1, x1);
        out.at(c, oy, ox) = (Scalar(1) - ty) * top + ty * bot;
      }
    }
  }
  return out;
}

template <typename Scalar>
Image<Scalar> flip_horizontal(const Image<Scalar>& image) {
  Image<Scalar> out(image.height, image.width);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = image.at(c, y, image.width - 1 - x);
  return out;
}

}  // namespace lucid
