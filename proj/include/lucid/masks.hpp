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
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lucid/types.hpp"

namespace lucid {

inline constexpr double kSimplexTolerance = 1e-5;

/// Soft assignment of every pixel to K object parts plus background.
/// Row k < K is part k; the last row is background. Per-pixel sums are 1.
template <typename Scalar>
struct PartMaskSet {
  int height = 0;
  int width = 0;
  Matrix<Scalar> maps;  // (K+1) x (height * width)
  std::string source_id;

  PartMaskSet() = default;
  PartMaskSet(int parts, int h, int w)
      : height(h), width(w), maps(Matrix<Scalar>::Zero(parts + 1, static_cast<Eigen::Index>(h) * w)) {}

  int part_count() const { return static_cast<int>(maps.rows()) - 1; }
  Eigen::Index cells() const { return static_cast<Eigen::Index>(height) * width; }
  Scalar& at(int k, int row, int col) { return maps(k, static_cast<Eigen::Index>(row) * width + col); }
  Scalar at(int k, int row, int col) const { return maps(k, static_cast<Eigen::Index>(row) * width + col); }
};

/// Dense embedding grid compared against part vectors.
template <typename Scalar>
struct DiscoFeatureMap {
  int height = 0;
  int width = 0;
  Matrix<Scalar> features;  // D x (height * width)
};

/// K+1 trainable part vectors (K object parts and background).
template <typename Scalar>
struct PartVectors {
  Matrix<Scalar> vectors;  // (K+1) x D
};

enum class MaskError {
  kIoFailure,
  kBadMagic,
  kBadVersion,
  kBadDimensions,
  kTruncated,
  kSimplexViolation,
};

class MaskFormatError : public std::runtime_error {
 public:
  MaskFormatError(MaskError code, const std::string& what) : std::runtime_error(what), code_(code) {}
  MaskError code() const { return code_; }

 private:
  MaskError code_;
};

template <typename Scalar>
bool satisfies_simplex(const PartMaskSet<Scalar>& mask, double tol = kSimplexTolerance) {
  if ((mask.maps.array() < Scalar(0)).any() || (mask.maps.array() > Scalar(1) + Scalar(tol)).any())
    return false;
  const auto sums = mask.maps.colwise().sum().eval();
  return ((sums.array() - Scalar(1)).abs() <= Scalar(tol)).all();
}

/// Per-pixel softmax over negated squared Euclidean distances between grid
/// embeddings and part vectors. Output rows follow the part-vector order, so
/// the background vector must come last.
template <typename Scalar>
PartMaskSet<Scalar> disco_attention(const DiscoFeatureMap<Scalar>& z, const PartVectors<Scalar>& q) {
  if (z.features.rows() != q.vectors.cols())
    throw std::invalid_argument("disco_attention: embedding dimension mismatch");
  const Eigen::Index parts = q.vectors.rows();  // K+1
  const Eigen::Index cells = z.features.cols();
  PartMaskSet<Scalar> out(static_cast<int>(parts) - 1, z.height, z.width);
  Vector<Scalar> neg_d2(parts);
  for (Eigen::Index p = 0; p < cells; ++p) {
    for (Eigen::Index k = 0; k < parts; ++k)
      neg_d2(k) = -(z.features.col(p) - q.vectors.row(k).transpose()).squaredNorm();
    const Scalar mx = neg_d2.maxCoeff();
    const auto ex = (neg_d2.array() - mx).exp().eval();
    out.maps.col(p) = ex / ex.sum();
  }
  return out;
}

/// Bilinear resize of every map followed by per-pixel renormalization, so the
/// simplex invariant holds exactly at the target resolution.
template <typename Scalar>
PartMaskSet<Scalar> resize_masks(const PartMaskSet<Scalar>& mask, int h, int w) {
  if (h <= 0 || w <= 0) throw std::invalid_argument("resize_masks: target size must be positive");
  if (h == mask.height && w == mask.width) return mask;
  PartMaskSet<Scalar> out(mask.part_count(), h, w);
  out.source_id = mask.source_id;
  const double sy = static_cast<double>(mask.height) / h;
  const double sx = static_cast<double>(mask.width) / w;
  const Eigen::Index rows = mask.maps.rows();
  for (int oy = 0; oy < h; ++oy) {
    const double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, mask.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, mask.height - 1);
    const Scalar ty = Scalar(fy - y0);
    for (int ox = 0; ox < w; ++ox) {
      const double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, mask.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, mask.width - 1);
      const Scalar tx = Scalar(fx - x0);
      for (Eigen::Index k = 0; k < rows; ++k) {
        const Scalar top = (Scalar(1) - tx) * mask.at(static_cast<int>(k), y0, x0) +
                           tx * mask.at(static_cast<int>(k), y0, x1);
        const Scalar bot = (Scalar(1) - tx) * mask.at(static_cast<int>(k), y1, x0) +
                           tx * mask.at(static_cast<int>(k), y1, x1);
        out.at(static_cast<int>(k), oy, ox) = (Scalar(1) - ty) * top + ty * bot;
      }
    }
  }
  for (Eigen::Index p = 0; p < out.cells(); ++p) {
    const Scalar sum = out.maps.col(p).sum();
    if (sum > Scalar(0)) out.maps.col(p) /= sum;
  }
  return out;
}

namespace detail {
inline constexpr char kMaskMagic[4] = {'L', 'P', 'P', 'M'};
inline constexpr std::uint32_t kMaskVersion = 1;

template <typename T>
void write_raw(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_raw(std::istream& is, T& value) {
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  return is.gcount() == sizeof(T);
}
}  // namespace detail

/// Little-endian container: magic "LPPM", u32 version, u32 parts (K+1),
/// u32 height, u32 width, then parts*height*width float32 values in
/// (part, row, col) order.
template <typename Scalar>
void save_masks(const PartMaskSet<Scalar>& mask, const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "mask files are little-endian");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw MaskFormatError(MaskError::kIoFailure, "save_masks: cannot open " + path);
  os.write(detail::kMaskMagic, 4);
  detail::write_raw(os, detail::kMaskVersion);
  detail::write_raw(os, static_cast<std::uint32_t>(mask.maps.rows()));
  detail::write_raw(os, static_cast<std::uint32_t>(mask.height));
  detail::write_raw(os, static_cast<std::uint32_t>(mask.width));
  for (Eigen::Index k = 0; k < mask.maps.rows(); ++k)
    for (Eigen::Index p = 0; p < mask.cells(); ++p) {
      const float v = static_cast<float>(mask.maps(k, p));
      detail::write_raw(os, v);
    }
  if (!os) throw MaskFormatError(MaskError::kIoFailure, "save_masks: write failed for " + path);
}

template <typename Scalar = double>
PartMaskSet<Scalar> load_masks(const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "mask files are little-endian");
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MaskFormatError(MaskError::kIoFailure, "load_masks: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, detail::kMaskMagic, 4) != 0)
    throw MaskFormatError(MaskError::kBadMagic, "load_masks: bad magic in " + path);
  std::uint32_t version = 0, parts = 0, height = 0, width = 0;
  if (!detail::read_raw(is, version) || !detail::read_raw(is, parts) || !detail::read_raw(is, height) ||
      !detail::read_raw(is, width))
    throw MaskFormatError(MaskError::kTruncated, "load_masks: truncated header in " + path);
  if (version != detail::kMaskVersion)
    throw MaskFormatError(MaskError::kBadVersion, "load_masks: unsupported version in " + path);
  if (parts < 2 || height == 0 || width == 0)
    throw MaskFormatError(MaskError::kBadDimensions, "load_masks: bad dimensions in " + path);

  PartMaskSet<Scalar> out(static_cast<int>(parts) - 1, static_cast<int>(height), static_cast<int>(width));
  for (Eigen::Index k = 0; k < out.maps.rows(); ++k)
    for (Eigen::Index p = 0; p < out.cells(); ++p) {
      float v;
      if (!detail::read_raw(is, v))
        throw MaskFormatError(MaskError::kTruncated, "load_masks: wrong element count in " + path);
      out.maps(k, p) = Scalar(v);
    }
  char extra;
  if (is.read(&extra, 1); is.gcount() != 0)
    throw MaskFormatError(MaskError::kTruncated, "load_masks: trailing bytes in " + path);
  if (!satisfies_simplex(out))
    throw MaskFormatError(MaskError::kSimplexViolation, "load_masks: per-pixel sums are not 1 in " + path);
  return out;
}

}  // namespace lucid
