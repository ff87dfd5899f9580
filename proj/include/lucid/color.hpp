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
#include <array>
#include <cmath>

namespace lucid {

// Luma weights used for grayscale conversion across the project.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

template <typename Scalar>
Scalar luminance(Scalar r, Scalar g, Scalar b) {
  return Scalar(kLumaR) * r + Scalar(kLumaG) * g + Scalar(kLumaB) * b;
}

template <typename Scalar>
struct Hsv {
  Scalar h = 0;  // degrees in [0, 360)
  Scalar s = 0;
  Scalar v = 0;
};

template <typename Scalar>
Hsv<Scalar> rgb_to_hsv(Scalar r, Scalar g, Scalar b) {
  const Scalar mx = std::max({r, g, b});
  const Scalar mn = std::min({r, g, b});
  const Scalar c = mx - mn;
  Hsv<Scalar> out;
  out.v = mx;
  out.s = mx > Scalar(0) ? c / mx : Scalar(0);
  if (c <= Scalar(0)) {
    out.h = Scalar(0);
    return out;
  }
  Scalar h;
  if (mx == r) {
    h = (g - b) / c;
    if (h < Scalar(0)) h += Scalar(6);
  } else if (mx == g) {
    h = (b - r) / c + Scalar(2);
  } else {
    h = (r - g) / c + Scalar(4);
  }
  out.h = Scalar(60) * h;
  if (out.h >= Scalar(360)) out.h -= Scalar(360);
  return out;
}

template <typename Scalar>
std::array<Scalar, 3> hsv_to_rgb(Scalar h, Scalar s, Scalar v) {
  h = std::fmod(h, Scalar(360));
  if (h < Scalar(0)) h += Scalar(360);
  const Scalar c = v * s;
  const Scalar hp = h / Scalar(60);
  const Scalar x = c * (Scalar(1) - std::abs(std::fmod(hp, Scalar(2)) - Scalar(1)));
  Scalar r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const Scalar m = v - c;
  return {r + m, g + m, b + m};
}

/// Color of the given hue whose grayscale luminance is exactly `luma`,
/// at HSV saturation `sat`. Any hue rotation of the result, rescaled back to
/// the same luminance, keeps every channel at or below luma / (1 - sat).
template <typename Scalar>
std::array<Scalar, 3> iso_luminant_color(Scalar hue_degrees, Scalar sat, Scalar luma) {
  const auto base = hsv_to_rgb(hue_degrees, sat, Scalar(1));
  const Scalar w = luminance(base[0], base[1], base[2]);
  const Scalar scale = luma / w;
  return {base[0] * scale, base[1] * scale, base[2] * scale};
}

}  // namespace lucid
