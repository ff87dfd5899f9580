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
#include <numeric>
#include <stdexcept>
#include <vector>

#include "lucid/branches.hpp"
#include "lucid/types.hpp"

namespace lucid {

template <typename Scalar>
struct FusedOutputs {
  MapStack<Scalar> z;           // elementwise product of the branch maps
  Matrix<Scalar> resemblance;   // K x M aggregated resemblance
  Vector<Scalar> class_scores;  // M; mean over parts, NOT a distribution
  IndexMatrix argmax;           // K x M
};

/// Multiplicative fusion of the branch maps plus the max/mean head.
template <typename Scalar>
FusedOutputs<Scalar> fuse(const MapStack<Scalar>& z_s, const MapStack<Scalar>& z_c, int parts,
                          int classes) {
  if (z_s.maps.rows() != z_c.maps.rows() || z_s.maps.cols() != z_c.maps.cols() ||
      z_s.height != z_c.height || z_s.width != z_c.width)
    throw std::invalid_argument("fuse: branch map shapes differ");
  FusedOutputs<Scalar> out;
  out.z.height = z_s.height;
  out.z.width = z_s.width;
  out.z.maps = z_s.maps.cwiseProduct(z_c.maps);
  max_reduce(out.z, parts, classes, out.resemblance, out.argmax);
  out.class_scores = out.resemblance.colwise().mean().transpose();
  return out;
}

/// Classes ordered by score descending; ties break to the lower class index.
template <typename Scalar>
std::vector<int> top_classes(const Vector<Scalar>& scores, int n) {
  if (n > scores.size()) throw std::invalid_argument("top_classes: n exceeds class count");
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores(a) > scores(b); });
  order.resize(n);
  return order;
}

template <typename Scalar>
int predict_class(const Vector<Scalar>& scores) {
  return static_cast<int>(argmax_row_major(scores));
}

}  // namespace lucid
