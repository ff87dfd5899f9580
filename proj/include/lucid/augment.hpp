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

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "lucid/image.hpp"
#include "lucid/masks.hpp"
#include "lucid/rng.hpp"
#include "lucid/types.hpp"

namespace lucid {

// Training-time policy: resize to side+8, one randomly chosen color-free op,
// random horizontal flip, then a random resized crop back to side x side with
// scale in [0.95, 1]. Geometry is resolved in a single nearest-neighbor pass
// and photometric ops only rescale channels jointly, so no pixel ever takes a
// hue absent from the source image.

enum class AugmentOp {
  kIdentity,
  kTranslateX,
  kTranslateY,
  kRotate,
  kShearX,
  kShearY,
  kContrast,
  kBrightness,
};

inline constexpr int kAugmentOpCount = 8;
inline constexpr double kMaxRotateDegrees = 20.0;
inline constexpr double kMaxShear = 0.2;
inline constexpr double kMaxTranslateFraction = 0.12;
inline constexpr double kMaxPhotometricDrop = 0.4;  // factor range [0.6, 1]
inline constexpr double kMinCropScale = 0.95;

struct AugmentPlan {
  Eigen::Matrix3d to_source = Eigen::Matrix3d::Identity();  // output pixel -> source pixel
  AugmentOp op = AugmentOp::kIdentity;
  double photo_factor = 1.0;
  int out_side = 0;
};

/// Draw one augmentation plan. The RNG consumption order is fixed; callers
/// relying on determinism must not reorder draws.
inline AugmentPlan sample_augment_plan(Rng& rng, int in_height, int in_width, int side) {
  const int resized = side + 8;
  AugmentPlan plan;
  plan.out_side = side;

  plan.op = static_cast<AugmentOp>(rng.uniform_int(kAugmentOpCount));
  const double magnitude = rng.uniform();
  const double sign = rng.bernoulli() ? 1.0 : -1.0;
  const bool flip = rng.bernoulli();
  const double area = rng.uniform(kMinCropScale, 1.0);
  const int crop_side =
      std::clamp(static_cast<int>(std::lround(std::sqrt(area) * resized)), 1, resized);
  const int crop_x = crop_side < resized ? rng.uniform_int(resized - crop_side + 1) : 0;
  const int crop_y = crop_side < resized ? rng.uniform_int(resized - crop_side + 1) : 0;

  // Inverse maps per stage, composed output-to-source. Homogeneous column
  // vectors (x, y, 1); pixel centers sit at integer coordinates.
  Eigen::Matrix3d resize_inv = Eigen::Matrix3d::Identity();
  resize_inv(0, 0) = static_cast<double>(in_width) / resized;
  resize_inv(1, 1) = static_cast<double>(in_height) / resized;
  resize_inv(0, 2) = 0.5 * resize_inv(0, 0) - 0.5;
  resize_inv(1, 2) = 0.5 * resize_inv(1, 1) - 0.5;

  Eigen::Matrix3d op_inv = Eigen::Matrix3d::Identity();
  const double center = (resized - 1) / 2.0;
  switch (plan.op) {
    case AugmentOp::kTranslateX:
      op_inv(0, 2) = -sign * magnitude * kMaxTranslateFraction * resized;
      break;
    case AugmentOp::kTranslateY:
      op_inv(1, 2) = -sign * magnitude * kMaxTranslateFraction * resized;
      break;
    case AugmentOp::kRotate: {
      const double theta = -sign * magnitude * kMaxRotateDegrees * std::numbers::pi / 180.0;
      const double c = std::cos(theta), s = std::sin(theta);
      op_inv(0, 0) = c;
      op_inv(0, 1) = -s;
      op_inv(1, 0) = s;
      op_inv(1, 1) = c;
      op_inv(0, 2) = center - c * center + s * center;
      op_inv(1, 2) = center - s * center - c * center;
      break;
    }
    case AugmentOp::kShearX:
      op_inv(0, 1) = -sign * magnitude * kMaxShear;
      op_inv(0, 2) = sign * magnitude * kMaxShear * center;
      break;
    case AugmentOp::kShearY:
      op_inv(1, 0) = -sign * magnitude * kMaxShear;
      op_inv(1, 2) = sign * magnitude * kMaxShear * center;
      break;
    case AugmentOp::kContrast:
    case AugmentOp::kBrightness:
      plan.photo_factor = 1.0 - magnitude * kMaxPhotometricDrop;
      break;
    case AugmentOp::kIdentity:
    default:
      break;
  }

  Eigen::Matrix3d flip_inv = Eigen::Matrix3d::Identity();
  if (flip) {
    flip_inv(0, 0) = -1.0;
    flip_inv(0, 2) = resized - 1.0;
  }

  Eigen::Matrix3d crop_inv = Eigen::Matrix3d::Identity();
  crop_inv(0, 0) = static_cast<double>(crop_side) / side;
  crop_inv(1, 1) = static_cast<double>(crop_side) / side;
  crop_inv(0, 2) = 0.5 * crop_inv(0, 0) - 0.5 + crop_x;
  crop_inv(1, 2) = 0.5 * crop_inv(1, 1) - 0.5 + crop_y;

  plan.to_source = resize_inv * op_inv * flip_inv * crop_inv;
  return plan;
}

/// Geometry via one nearest-neighbor lookup; out-of-bounds pixels are black.
/// Photometric ops rescale channels jointly and never leave [0,1].
template <typename Scalar>
Image<Scalar> apply_augment(const AugmentPlan& plan, const Image<Scalar>& image) {
  Image<Scalar> out(plan.out_side, plan.out_side);
  Scalar gray_mean = 0;
  if (plan.op == AugmentOp::kContrast)
    gray_mean = (Scalar(kLumaR) * image.data.row(0) + Scalar(kLumaG) * image.data.row(1) +
                 Scalar(kLumaB) * image.data.row(2))
                    .mean();
  for (int y = 0; y < plan.out_side; ++y) {
    for (int x = 0; x < plan.out_side; ++x) {
      const Eigen::Vector3d src = plan.to_source * Eigen::Vector3d(x, y, 1.0);
      const int sx = static_cast<int>(std::lround(src.x()));
      const int sy = static_cast<int>(std::lround(src.y()));
      if (sx < 0 || sy < 0 || sx >= image.width || sy >= image.height) continue;
      for (int c = 0; c < 3; ++c) {
        Scalar v = image.at(c, sy, sx);
        if (plan.op == AugmentOp::kContrast)
          v = gray_mean + (v - gray_mean) * Scalar(plan.photo_factor);
        else if (plan.op == AugmentOp::kBrightness)
          v *= Scalar(plan.photo_factor);
        out.at(c, y, x) = v;
      }
    }
  }
  return out;
}

/// Same geometry as the image path; out-of-bounds pixels become background.
template <typename Scalar>
PartMaskSet<Scalar> apply_augment(const AugmentPlan& plan, const PartMaskSet<Scalar>& mask) {
  PartMaskSet<Scalar> out(mask.part_count(), plan.out_side, plan.out_side);
  out.source_id = mask.source_id;
  const int background = mask.part_count();
  for (int y = 0; y < plan.out_side; ++y) {
    for (int x = 0; x < plan.out_side; ++x) {
      const Eigen::Vector3d src = plan.to_source * Eigen::Vector3d(x, y, 1.0);
      const int sx = static_cast<int>(std::lround(src.x()));
      const int sy = static_cast<int>(std::lround(src.y()));
      if (sx < 0 || sy < 0 || sx >= mask.width || sy >= mask.height) {
        out.at(background, y, x) = Scalar(1);
        continue;
      }
      for (int k = 0; k <= background; ++k) out.at(k, y, x) = mask.at(k, sy, sx);
    }
  }
  return out;
}

/// Training transform for a lone image (spec mode: augmentation enabled).
template <typename Scalar>
ImageSample<Scalar> apply_train_augmentations(const ImageSample<Scalar>& sample, Rng& rng, int side) {
  const AugmentPlan plan = sample_augment_plan(rng, sample.image.height, sample.image.width, side);
  return {apply_augment(plan, sample.image), sample.label, sample.id};
}

/// Evaluation transform: resize to side x side only.
template <typename Scalar>
Image<Scalar> eval_transform(const Image<Scalar>& image, int side) {
  return resize_bilinear(image, side, side);
}

}  // namespace lucid
