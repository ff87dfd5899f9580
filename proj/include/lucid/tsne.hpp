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

#include <algorithm>
#include <cmath>
#include <vector>

#include "lucid/rng.hpp"
#include "lucid/types.hpp"

namespace lucid {

/// Exact t-SNE to one dimension for small point sets (hundreds of points).
/// Deterministic given the seed: PCA initialization with seeded jitter and a
/// fixed iteration schedule. The embedding starts at data scale along the
/// leading principal axis, which keeps separated clusters contiguous in 1-D
/// while the optimization refines local order.
inline std::vector<double> tsne_embed_1d(const Matrix<double>& points, std::uint64_t seed,
                                         double perplexity = 30.0, int iterations = 200) {
  const Eigen::Index n = points.rows();
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  if (n <= 1) return out;
  if (n == 2) return {0.0, 1.0};

  // pairwise squared distances
  Matrix<double> d2(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d2(i, j) = (points.row(i) - points.row(j)).squaredNorm();

  // per-point bandwidth via bisection on the perplexity
  const double perp = std::max(2.0, std::min(perplexity, (n - 1) / 3.0));
  const double target_entropy = std::log(perp);
  Matrix<double> p = Matrix<double>::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0, beta_lo = 0.0, beta_hi = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 64; ++iter) {
      double sum = 0.0, weighted = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double w = std::exp(-beta * d2(i, j));
        sum += w;
        weighted += w * d2(i, j);
      }
      if (sum <= 0.0) {
        beta_hi = beta;
        beta = (beta_lo + beta) / 2.0;
        continue;
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      if (std::abs(entropy - target_entropy) < 1e-5) break;
      if (entropy > target_entropy) {
        beta_lo = beta;
        beta = std::isinf(beta_hi) ? beta * 2.0 : (beta + beta_hi) / 2.0;
      } else {
        beta_hi = beta;
        beta = (beta + beta_lo) / 2.0;
      }
    }
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) sum += std::exp(-beta * d2(i, j));
    if (sum <= 0.0) {
      for (Eigen::Index j = 0; j < n; ++j) p(i, j) = j == i ? 0.0 : 1.0 / double(n - 1);
    } else {
      for (Eigen::Index j = 0; j < n; ++j) p(i, j) = j == i ? 0.0 : std::exp(-beta * d2(i, j)) / sum;
    }
  }
  // symmetrize
  Matrix<double> pj = (p + p.transpose()) / (2.0 * double(n));
  pj = pj.cwiseMax(1e-12);

  // PCA initialization: project on the leading eigenvector of the covariance
  const Eigen::RowVector3d mean = points.colwise().mean();
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVector3d c = points.row(i) - mean;
    cov += c.transpose() * c;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const Eigen::Vector3d axis = eig.eigenvectors().col(2);  // largest eigenvalue last

  Rng rng(derive_seed(seed, 0x74534e45ull));
  Vector<double> y(n), velocity = Vector<double>::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = (points.row(i) - mean).dot(axis);
  const double spread = std::sqrt(y.squaredNorm() / double(n));
  if (spread > 0) y /= spread;
  for (Eigen::Index i = 0; i < n; ++i) y(i) = 5.0 * y(i) + 1e-6 * rng.normal();

  const int exaggeration_end = std::min(50, iterations / 4);
  const double lr = 20.0;
  Matrix<double> w(n, n);
  Vector<double> grad(n);
  for (int iter = 0; iter < iterations; ++iter) {
    const double exaggeration = iter < exaggeration_end ? 4.0 : 1.0;
    const double momentum = iter < iterations / 2 ? 0.5 : 0.8;

    // student-t affinities in the embedding; w and pj are symmetric, so
    // column access covers row i as well
    for (Eigen::Index i = 0; i < n; ++i) {
      w.col(i) = ((y.array() - y(i)).square() + 1.0).inverse();
      w(i, i) = 0.0;
    }
    const double inv_q_sum = 1.0 / std::max(w.sum(), 1e-12);

    for (Eigen::Index i = 0; i < n; ++i) {
      const auto wi = w.col(i).array();
      grad(i) = 4.0 * ((exaggeration * pj.col(i).array() - wi * inv_q_sum) * (y(i) - y.array()) * wi)
                          .sum();
    }

    velocity = momentum * velocity - lr * grad;
    y += velocity;
    y.array() -= y.mean();
  }

  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = y(i);
  return out;
}

}  // namespace lucid
