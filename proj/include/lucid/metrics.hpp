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

#include <stdexcept>
#include <string>
#include <vector>

#include "lucid/dataset.hpp"
#include "lucid/model.hpp"
#include "lucid/rng.hpp"

namespace lucid {

inline constexpr double kIouThreshold = 0.5;
inline constexpr int kSparsityLevels = 5;  // probe grid {0, .25, .5, .75, 1}^3

template <typename Scalar>
struct AccuracyReport {
  double full = 0.0;       // argmax over fused class scores
  double shapetex = 0.0;   // argmax over the grayscale branch alone
  std::vector<double> per_class;
  std::vector<int> per_class_count;
};

template <typename Scalar>
AccuracyReport<Scalar> accuracy(const LucidModel<Scalar>& model,
                                const std::vector<ImageSample<Scalar>>& samples) {
  if (samples.empty()) throw std::invalid_argument("accuracy: empty dataset");
  AccuracyReport<Scalar> report;
  report.per_class.assign(model.config.classes, 0.0);
  report.per_class_count.assign(model.config.classes, 0);
  long full_hits = 0, shapetex_hits = 0;
  for (const auto& sample : samples) {
    const auto result = model.forward_image(eval_transform(sample.image, model.config.image_side));
    const int full = predict_class(result.fused.class_scores);
    const int gray = predict_class(result.shapetex.class_scores);
    if (full == sample.label) {
      ++full_hits;
      report.per_class[sample.label] += 1.0;
    }
    if (gray == sample.label) ++shapetex_hits;
    report.per_class_count[sample.label] += 1;
  }
  for (int m = 0; m < model.config.classes; ++m)
    if (report.per_class_count[m] > 0) report.per_class[m] /= report.per_class_count[m];
  report.full = static_cast<double>(full_hits) / static_cast<double>(samples.size());
  report.shapetex = static_cast<double>(shapetex_hits) / static_cast<double>(samples.size());
  return report;
}

/// Mean IoU over parts for one sample: the label slice of the shape/texture
/// map binarized at 0.5 against the argmax part assignment of the mask.
/// Empty against empty counts as IoU 1.
template <typename Scalar>
double part_iou_single(const MapStack<Scalar>& z_s, const PartMaskSet<Scalar>& mask, int label,
                       int parts, int classes) {
  if (mask.height != z_s.height || mask.width != z_s.width)
    throw std::invalid_argument("part_iou: mask resolution mismatch");
  double sum = 0.0;
  for (int k = 0; k < parts; ++k) {
    const Eigen::Index channel = static_cast<Eigen::Index>(k) * classes + label;
    long inter = 0, uni = 0;
    for (Eigen::Index p = 0; p < z_s.cells(); ++p) {
      const bool predicted = z_s.maps(channel, p) > Scalar(kIouThreshold);
      Eigen::Index best = 0;
      for (Eigen::Index kk = 1; kk < mask.maps.rows(); ++kk)
        if (mask.maps(kk, p) > mask.maps(best, p)) best = kk;
      const bool actual = best == k;
      inter += predicted && actual;
      uni += predicted || actual;
    }
    sum += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }
  return sum / parts;
}

/// Dataset-level mean IoU; masks are resized to the model resolution here.
template <typename Scalar>
double part_iou(const LucidModel<Scalar>& model, const Dataset<Scalar>& data) {
  if (data.samples.empty()) throw std::invalid_argument("part_iou: empty dataset");
  const int feat = model.config.feature_side();
  double sum = 0.0;
  for (const auto& sample : data.samples) {
    const auto inputs = model.prepare(eval_transform(sample.image, model.config.image_side));
    const auto st = model.shapetex.forward(inputs.gray);
    const auto mask = resize_masks(mask_for(data, sample.id), feat, feat);
    sum += part_iou_single(st.z, mask, sample.label, model.config.parts, model.config.classes);
  }
  return sum / static_cast<double>(data.samples.size());
}

/// Percentage of the 5x5x5 RGB probe grid with color resemblance strictly
/// below 0.5, averaged over all K*M prototypes.
template <typename Scalar>
double color_sparsity(const LucidModel<Scalar>& model) {
  const int parts = model.config.parts, classes = model.config.classes;
  Matrix<double> below = Matrix<double>::Zero(parts, classes);
  int probes = 0;
  for (int ri = 0; ri < kSparsityLevels; ++ri)
    for (int gi = 0; gi < kSparsityLevels; ++gi)
      for (int bi = 0; bi < kSparsityLevels; ++bi) {
        const Scalar r = Scalar(ri) / Scalar(kSparsityLevels - 1);
        const Scalar g = Scalar(gi) / Scalar(kSparsityLevels - 1);
        const Scalar b = Scalar(bi) / Scalar(kSparsityLevels - 1);
        const Matrix<Scalar> response = model.colornet.response(r, g, b);
        for (int k = 0; k < parts; ++k)
          for (int m = 0; m < classes; ++m)
            if (response(k, m) < Scalar(0.5)) below(k, m) += 1.0;
        ++probes;
      }
  return 100.0 * below.sum() / static_cast<double>(probes * parts * classes);
}

template <typename Scalar>
struct HueRobustness {
  double acc_original = 0.0;
  double acc_perturbed = 0.0;
  double shapetex_original = 0.0;
  double shapetex_perturbed = 0.0;
  double clamped_fraction = 0.0;  // mean over images, for diagnostics
};

/// Accuracy before and after a seeded random hue rotation per image.
template <typename Scalar>
HueRobustness<Scalar> hue_robustness(const LucidModel<Scalar>& model,
                                     const std::vector<ImageSample<Scalar>>& samples,
                                     std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x48554521ull));
  std::vector<ImageSample<Scalar>> perturbed;
  perturbed.reserve(samples.size());
  double clamped = 0.0;
  for (const auto& sample : samples) {
    auto result = hue_perturb(sample.image, rng.uniform(0.0, 360.0));
    clamped += result.clamped_fraction;
    perturbed.push_back({std::move(result.image), sample.label, sample.id});
  }
  const auto base = accuracy(model, samples);
  const auto moved = accuracy(model, perturbed);
  HueRobustness<Scalar> out;
  out.acc_original = base.full;
  out.acc_perturbed = moved.full;
  out.shapetex_original = base.shapetex;
  out.shapetex_perturbed = moved.shapetex;
  out.clamped_fraction = samples.empty() ? 0.0 : clamped / samples.size();
  return out;
}

template <typename Scalar>
struct MetricReport {
  double accuracy = 0.0;
  double shapetex_accuracy = 0.0;
  double mean_iou = 0.0;
  double color_sparsity = 0.0;
  double hue_accuracy = 0.0;
  double hue_shapetex_accuracy = 0.0;
  std::vector<std::string> class_names;
  std::vector<double> per_class_accuracy;
  std::vector<int> per_class_count;
};

/// Everything in one pass; IoU needs masks, hue metrics need a seed.
template <typename Scalar>
MetricReport<Scalar> evaluate(const LucidModel<Scalar>& model, const Dataset<Scalar>& data,
                              bool with_iou, bool with_hue, std::uint64_t hue_seed) {
  MetricReport<Scalar> report;
  const auto acc = accuracy(model, data.samples);
  report.accuracy = acc.full;
  report.shapetex_accuracy = acc.shapetex;
  report.per_class_accuracy = acc.per_class;
  report.per_class_count = acc.per_class_count;
  report.class_names = data.class_names;
  report.color_sparsity = color_sparsity(model);
  if (with_iou) report.mean_iou = part_iou(model, data);
  if (with_hue) {
    const auto hue = hue_robustness(model, data.samples, hue_seed);
    report.hue_accuracy = hue.acc_perturbed;
    report.hue_shapetex_accuracy = hue.shapetex_perturbed;
  }
  return report;
}

}  // namespace lucid
