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
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "lucid/color.hpp"
#include "lucid/image.hpp"
#include "lucid/masks.hpp"
#include "lucid/rng.hpp"
#include "lucid/types.hpp"

namespace lucid {

// Fine-grained toy classes: each class renders K parts into fixed canvas
// slots, one shape + texture + hue per part. Part colors are iso-luminant so
// that hue carries no grayscale evidence and hue rotations never clamp.

inline constexpr int kShapeKinds = 6;    // disk, square, triangle, diamond, ring, cross
inline constexpr int kTextureKinds = 5;  // solid, hstripes, vstripes, checker, dots
inline constexpr double kBackgroundGray = 0.15;
inline constexpr double kTextureDim = 0.55;

struct PartAppearance {
  int shape_id = 0;
  int texture_id = 0;
  double hue_degrees = 0.0;
};

struct SyntheticSpec {
  int classes = 4;
  int parts = 2;
  int canvas = 64;
  std::vector<std::vector<PartAppearance>> table;  // [class][part]
  std::uint64_t seed = 1;
  double luminance = 0.45;
  double saturation = 0.5;
};

/// Classes share geometry and texture and differ only in part hue.
inline SyntheticSpec color_only_spec(int classes, int parts, int canvas, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.classes = classes;
  spec.parts = parts;
  spec.canvas = canvas;
  spec.seed = seed;
  spec.table.resize(classes);
  for (int m = 0; m < classes; ++m) {
    spec.table[m].resize(parts);
    for (int k = 0; k < parts; ++k) {
      spec.table[m][k].shape_id = k % kShapeKinds;
      spec.table[m][k].texture_id = k % kTextureKinds;
      // offset part hues so prototypes stay distinguishable within a class
      spec.table[m][k].hue_degrees = std::fmod(360.0 * m / classes + 37.0 * k, 360.0);
    }
  }
  return spec;
}

/// Classes share one hue and differ in shape per slot.
inline SyntheticSpec shape_only_spec(int classes, int parts, int canvas, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.classes = classes;
  spec.parts = parts;
  spec.canvas = canvas;
  spec.seed = seed;
  spec.table.resize(classes);
  for (int m = 0; m < classes; ++m) {
    spec.table[m].resize(parts);
    for (int k = 0; k < parts; ++k) {
      spec.table[m][k].shape_id = (m + k) % kShapeKinds;
      spec.table[m][k].texture_id = (m + 2 * k) % kTextureKinds;
      spec.table[m][k].hue_degrees = 140.0;
    }
  }
  return spec;
}

struct SlotLayout {
  int grid_cols = 0;
  int grid_rows = 0;
  int slot_side = 0;
};

inline SlotLayout slot_layout(int parts, int canvas) {
  SlotLayout layout;
  layout.grid_cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(parts))));
  layout.grid_rows = (parts + layout.grid_cols - 1) / layout.grid_cols;
  layout.slot_side = std::min(canvas / layout.grid_cols, canvas / layout.grid_rows);
  return layout;
}

inline void validate_spec(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw std::invalid_argument("synthetic: need at least 2 classes");
  if (spec.parts < 1) throw std::invalid_argument("synthetic: need at least 1 part");
  if (static_cast<int>(spec.table.size()) != spec.classes)
    throw std::invalid_argument("synthetic: appearance table rows != classes");
  for (const auto& row : spec.table)
    if (static_cast<int>(row.size()) != spec.parts)
      throw std::invalid_argument("synthetic: appearance table cols != parts");
  const SlotLayout layout = slot_layout(spec.parts, spec.canvas);
  if (layout.slot_side < 12)
    throw std::invalid_argument("synthetic: canvas too small to place parts without overlap");
  for (int a = 0; a < spec.classes; ++a)
    for (int b = a + 1; b < spec.classes; ++b) {
      bool differ = false;
      for (int k = 0; k < spec.parts && !differ; ++k) {
        const auto& pa = spec.table[a][k];
        const auto& pb = spec.table[b][k];
        differ = pa.shape_id != pb.shape_id || pa.texture_id != pb.texture_id ||
                 std::abs(pa.hue_degrees - pb.hue_degrees) > 1e-9;
      }
      if (!differ) throw std::invalid_argument("synthetic: classes " + std::to_string(a) + " and " +
                                               std::to_string(b) + " are indistinguishable");
    }
  // saturation bounds the post-rotation channel peak at luminance/(1-sat)
  if (spec.luminance / (1.0 - spec.saturation) > 0.995)
    throw std::invalid_argument("synthetic: palette can clamp under hue rotation");
}

namespace detail {

inline bool inside_shape(int shape_id, double dx, double dy, double radius) {
  const double ax = std::abs(dx), ay = std::abs(dy);
  switch (shape_id) {
    case 0:  // disk
      return dx * dx + dy * dy <= radius * radius;
    case 1:  // square
      return ax <= radius * 0.82 && ay <= radius * 0.82;
    case 2:  // triangle (apex up)
      return dy >= -radius && dy <= radius && ax <= (dy + radius) * 0.5;
    case 3:  // diamond
      return ax + ay <= radius * 1.15;
    case 4:  // ring
      return dx * dx + dy * dy <= radius * radius && dx * dx + dy * dy >= 0.25 * radius * radius;
    case 5:  // cross
      return (ax <= radius * 0.33 && ay <= radius) || (ay <= radius * 0.33 && ax <= radius);
    default:
      throw std::invalid_argument("synthetic: unknown shape id");
  }
}

inline double texture_factor(int texture_id, double dx, double dy, int band) {
  const auto stripe = [&](double t) {
    const int idx = static_cast<int>(std::floor(t / band));
    return (idx % 2 + 2) % 2 == 0 ? 1.0 : kTextureDim;
  };
  switch (texture_id) {
    case 0:
      return 1.0;
    case 1:
      return stripe(dy);
    case 2:
      return stripe(dx);
    case 3: {
      const int ix = static_cast<int>(std::floor(dx / band));
      const int iy = static_cast<int>(std::floor(dy / band));
      return ((ix + iy) % 2 + 2) % 2 == 0 ? 1.0 : kTextureDim;
    }
    case 4: {
      const double cx = dx - std::floor(dx / (2.0 * band)) * 2.0 * band - band;
      const double cy = dy - std::floor(dy / (2.0 * band)) * 2.0 * band - band;
      return cx * cx + cy * cy <= 0.36 * band * band ? kTextureDim : 1.0;
    }
    default:
      throw std::invalid_argument("synthetic: unknown texture id");
  }
}

}  // namespace detail

template <typename Scalar>
struct SyntheticImage {
  ImageSample<Scalar> sample;
  PartMaskSet<Scalar> mask;
};

/// Render one image of class `label`. Geometry jitter comes only from `rng`,
/// so two classes rendered with identical RNG streams differ solely in their
/// appearance table entries.
template <typename Scalar>
SyntheticImage<Scalar> render_synthetic(const SyntheticSpec& spec, int label, Rng& rng,
                                        const std::string& id) {
  const SlotLayout layout = slot_layout(spec.parts, spec.canvas);
  SyntheticImage<Scalar> out;
  out.sample.label = label;
  out.sample.id = id;
  out.sample.image = Image<Scalar>(spec.canvas, spec.canvas);
  out.sample.image.data.setConstant(Scalar(kBackgroundGray));
  out.mask = PartMaskSet<Scalar>(spec.parts, spec.canvas, spec.canvas);
  out.mask.source_id = id;
  out.mask.maps.row(spec.parts).setOnes();

  const int band = std::max(2, spec.canvas / 16);
  for (int k = 0; k < spec.parts; ++k) {
    const double jx = rng.uniform(-1.0, 1.0);
    const double jy = rng.uniform(-1.0, 1.0);
    const double js = rng.uniform();
    const int slot_col = k % layout.grid_cols;
    const int slot_row = k / layout.grid_cols;
    const double cx = (slot_col + 0.5) * layout.slot_side + jx * 0.08 * layout.slot_side;
    const double cy = (slot_row + 0.5) * layout.slot_side + jy * 0.08 * layout.slot_side;
    const double radius = (0.28 + 0.06 * js) * layout.slot_side;

    const PartAppearance& part = spec.table[label][k];
    const auto rgb = iso_luminant_color<Scalar>(Scalar(part.hue_degrees), Scalar(spec.saturation),
                                                Scalar(spec.luminance));
    for (int y = 0; y < spec.canvas; ++y) {
      for (int x = 0; x < spec.canvas; ++x) {
        const double dx = x - cx, dy = y - cy;
        if (!detail::inside_shape(part.shape_id, dx, dy, radius)) continue;
        const Scalar t = Scalar(detail::texture_factor(part.texture_id, dx, dy, band));
        out.sample.image.at(0, y, x) = rgb[0] * t;
        out.sample.image.at(1, y, x) = rgb[1] * t;
        out.sample.image.at(2, y, x) = rgb[2] * t;
        out.mask.at(k, y, x) = Scalar(1);
        out.mask.at(spec.parts, y, x) = Scalar(0);
      }
    }
  }
  return out;
}

template <typename Scalar>
struct SyntheticDataset {
  std::vector<ImageSample<Scalar>> samples;
  std::map<std::string, PartMaskSet<Scalar>> masks;
  std::vector<std::string> class_names;
};

inline std::string synthetic_class_name(int label) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "class_%02d", label);
  return buf;
}

/// Generate `per_class` images per class. The geometry stream for image i is
/// shared across classes, so classes that differ only in hue yield grayscale
/// images that are pixel-identical pairwise.
template <typename Scalar = double>
SyntheticDataset<Scalar> generate_synthetic(const SyntheticSpec& spec, int per_class,
                                            const std::string& tag = "img") {
  validate_spec(spec);
  SyntheticDataset<Scalar> out;
  for (int m = 0; m < spec.classes; ++m) out.class_names.push_back(synthetic_class_name(m));
  for (int m = 0; m < spec.classes; ++m) {
    for (int i = 0; i < per_class; ++i) {
      Rng rng(derive_seed(spec.seed, fnv1a64(tag) + static_cast<std::uint64_t>(i)));
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%s_%04d", tag.c_str(), i);
      const std::string id = out.class_names[m] + "/" + buf;
      auto rendered = render_synthetic<Scalar>(spec, m, rng, id);
      out.masks.emplace(id, std::move(rendered.mask));
      out.samples.push_back(std::move(rendered.sample));
    }
  }
  return out;
}

/// Ground-truth masks for a generated dataset (the oracle mask provider).
template <typename Scalar = double>
std::map<std::string, PartMaskSet<Scalar>> oracle_masks(const SyntheticDataset<Scalar>& dataset) {
  return dataset.masks;
}

}  // namespace lucid
