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

#include <cstdint>
#include <string>
#include <vector>

#include "lucid/types.hpp"

namespace lucid {

/// 8-bit RGB raster used for rendering and file I/O.
struct Raster {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Raster() = default;
  Raster(int h, int w, std::uint8_t fill = 0) : height(h), width(w), rgb(3u * h * w, fill) {}

  std::uint8_t* pixel(int y, int x) { return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
  const std::uint8_t* pixel(int y, int x) const {
    return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }
};

Raster read_raster(const std::string& path);        // .png or .jpg/.jpeg
void write_png(const std::string& path, const Raster& raster);

Raster to_raster(const Image<double>& image);
Image<double> to_image(const Raster& raster);

inline Image<double> read_image(const std::string& path) { return to_image(read_raster(path)); }
inline void write_image_png(const std::string& path, const Image<double>& image) {
  write_png(path, to_raster(image));
}

}  // namespace lucid
