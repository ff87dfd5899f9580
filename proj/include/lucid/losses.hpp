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

#include "lucid/branches.hpp"
#include "lucid/fusion.hpp"
#include "lucid/masks.hpp"
#include "lucid/types.hpp"

namespace lucid {

inline constexpr double kBceEpsilon = 1e-7;

template <typename Scalar>
struct LossWeights {
  Scalar alpha_d = Scalar(1.4);
  Scalar alpha_s = Scalar(1.0);
  Scalar alpha_a = Scalar(1.0);
};

template <typename Scalar>
struct LossBreakdown {
  Scalar l_d = 0, l_s = 0, l_a = 0, total = 0;
};

/// Binary cross-entropy with the prediction clamped to [eps, 1-eps].
template <typename Scalar>
Scalar bce(Scalar u, Scalar v) {
  u = std::clamp(u, Scalar(kBceEpsilon), Scalar(1) - Scalar(kBceEpsilon));
  return -(v * std::log(u) + (Scalar(1) - v) * std::log(Scalar(1) - u));
}

/// d bce / d u; zero outside the clamp interval where the loss is constant.
template <typename Scalar>
Scalar bce_grad(Scalar u, Scalar v) {
  if (u <= Scalar(kBceEpsilon) || u >= Scalar(1) - Scalar(kBceEpsilon)) return Scalar(0);
  return (u - v) / (u * (Scalar(1) - u));
}

/// Mean elementwise binary cross-entropy between two equally shaped maps.
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar mbce(const Eigen::MatrixBase<DerivedU>& u,
                               const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  if (u.rows() != v.rows() || u.cols() != v.cols())
    throw std::invalid_argument("mbce: map shapes differ");
  Scalar sum = 0;
  for (Eigen::Index j = 0; j < u.cols(); ++j)
    for (Eigen::Index i = 0; i < u.rows(); ++i) sum += bce(u(i, j), Scalar(v(i, j)));
  return sum / Scalar(u.size());
}

/// Part-correspondence loss: align the ground-truth class slice of the
/// shape/texture feature map with the part masks. Background is unused.
template <typename Scalar>
Scalar loss_correspondence(const MapStack<Scalar>& z_s, const PartMaskSet<Scalar>& masks, int label,
                           int parts, int classes) {
  if (masks.height != z_s.height || masks.width != z_s.width)
    throw std::invalid_argument("loss_correspondence: masks not at model resolution");
  Scalar sum = 0;
  for (int k = 0; k < parts; ++k) {
    const Eigen::Index channel = static_cast<Eigen::Index>(k) * classes + label;
    sum += mbce(z_s.maps.row(channel), masks.maps.row(k));
  }
  return sum / Scalar(parts);
}

/// Classification pressure on per-prototype resemblances against the one-hot
/// label, averaged over all K*M prototypes.
template <typename Scalar>
Scalar loss_resemblance(const Matrix<Scalar>& resemblance, int label) {
  Scalar sum = 0;
  for (Eigen::Index m = 0; m < resemblance.cols(); ++m) {
    const Scalar target = m == label ? Scalar(1) : Scalar(0);
    for (Eigen::Index k = 0; k < resemblance.rows(); ++k) sum += bce(resemblance(k, m), target);
  }
  return sum / Scalar(resemblance.size());
}

template <typename Scalar>
Scalar loss_shapetex(const Matrix<Scalar>& r_s, int label) {
  return loss_resemblance(r_s, label);
}

template <typename Scalar>
Scalar loss_aggregated(const Matrix<Scalar>& r_a, int label) {
  return loss_resemblance(r_a, label);
}

template <typename Scalar>
LossBreakdown<Scalar> total_loss(Scalar l_d, Scalar l_s, Scalar l_a, const LossWeights<Scalar>& w) {
  LossBreakdown<Scalar> out;
  out.l_d = l_d;
  out.l_s = l_s;
  out.l_a = l_a;
  out.total = w.alpha_d * l_d + w.alpha_s * l_s + w.alpha_a * l_a;
  return out;
}

template <typename Scalar>
struct LossGrads {
  Matrix<Scalar> dz_s;  // gradient w.r.t. the shape/texture sigmoid maps
  Matrix<Scalar> dz_c;  // gradient w.r.t. the color sigmoid maps
  LossBreakdown<Scalar> breakdown;
};

/// Loss value and analytic gradients w.r.t. both branch feature maps for one
/// sample. Max-pool gradients route to the recorded argmax cells.
template <typename Scalar>
LossGrads<Scalar> loss_and_gradients(const ShapeTexOutputs<Scalar>& st, const ColorOutputs<Scalar>& co,
                                     const FusedOutputs<Scalar>& fused, const PartMaskSet<Scalar>& masks,
                                     int label, int parts, int classes,
                                     const LossWeights<Scalar>& weights) {
  const Eigen::Index cells = st.z.cells();
  LossGrads<Scalar> out;
  out.dz_s = Matrix<Scalar>::Zero(st.z.maps.rows(), cells);
  out.dz_c = Matrix<Scalar>::Zero(co.z.maps.rows(), cells);

  const Scalar l_d = loss_correspondence(st.z, masks, label, parts, classes);
  const Scalar l_s = loss_shapetex(st.resemblance, label);
  const Scalar l_a = loss_aggregated(fused.resemblance, label);
  out.breakdown = total_loss(l_d, l_s, l_a, weights);

  const Scalar d_scale = weights.alpha_d / (Scalar(parts) * Scalar(cells));
  for (int k = 0; k < parts; ++k) {
    const Eigen::Index channel = static_cast<Eigen::Index>(k) * classes + label;
    for (Eigen::Index p = 0; p < cells; ++p)
      out.dz_s(channel, p) += d_scale * bce_grad(st.z.maps(channel, p), masks.maps(k, p));
  }

  const Scalar head_scale = Scalar(1) / Scalar(parts * classes);
  for (int k = 0; k < parts; ++k)
    for (int m = 0; m < classes; ++m) {
      const Eigen::Index channel = static_cast<Eigen::Index>(k) * classes + m;
      const Scalar target = m == label ? Scalar(1) : Scalar(0);

      const Scalar g_s = weights.alpha_s * head_scale * bce_grad(st.resemblance(k, m), target);
      out.dz_s(channel, st.argmax(k, m)) += g_s;

      const Scalar g_a = weights.alpha_a * head_scale * bce_grad(fused.resemblance(k, m), target);
      const Eigen::Index p = fused.argmax(k, m);
      out.dz_s(channel, p) += g_a * co.z.maps(channel, p);
      out.dz_c(channel, p) += g_a * st.z.maps(channel, p);
    }

  return out;
}

}  // namespace lucid
