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
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lucid/dataset.hpp"
#include "lucid/metrics.hpp"
#include "lucid/model.hpp"
#include "lucid/tsne.hpp"

namespace lucid {

inline constexpr int kGrayPatchCount = 5;
inline constexpr int kColorPatchCount = 10;
inline constexpr int kPatchMarginCells = 1;
inline constexpr int kBarSamplesPerPatch = 64;
inline constexpr double kBarCellThreshold = 0.5;  // of the patch maximum

struct PrototypePatch {
  std::string image_id;
  int feat_row = 0, feat_col = 0;  // argmax cell
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // image-space rectangle, half-open
  double score = 0.0;
  enum class Variant { kGrayscale, kColor } variant = Variant::kGrayscale;
};

struct ColorBar {
  std::vector<std::array<double, 3>> swatches;  // ordered by the 1-D embedding
  std::vector<std::string> source_patch_ids;
};

struct MinedPrototype {
  std::vector<PrototypePatch> gray;   // up to 5, score desc then id asc
  std::vector<PrototypePatch> color;  // up to 10
  ColorBar bar;
  bool complete = true;  // false when the trainset had fewer images than asked
};

struct PartExplanation {
  int part = 0;
  double r_s = 0, r_c = 0, r_a = 0;
  double r_product = 0;  // r_s * r_c, stored alongside the aggregated value
  int argmax_row = 0, argmax_col = 0;  // location of the aggregated maximum
  MinedPrototype prototype;
};

struct ExplanationRecord {
  std::string image_id;
  int predicted_class = 0;
  double aggregated_score = 0.0;  // fused class score of the predicted class
  std::vector<PartExplanation> parts;  // exactly K entries
};

/// Patch rectangle: the argmax cell plus a one-cell margin, mapped to image
/// coordinates by the uniform cell size and clamped to the image bounds.
inline std::array<int, 4> patch_rect(int feat_row, int feat_col, int feat_side, int image_side) {
  const int cell = image_side / feat_side;
  const int r0 = std::max(0, feat_row - kPatchMarginCells);
  const int c0 = std::max(0, feat_col - kPatchMarginCells);
  const int r1 = std::min(feat_side - 1, feat_row + kPatchMarginCells);
  const int c1 = std::min(feat_side - 1, feat_col + kPatchMarginCells);
  return {c0 * cell, r0 * cell, (c1 + 1) * cell, (r1 + 1) * cell};  // x0, y0, x1, y1
}

/// Mines patches and builds color bars against a fixed training set. Forward
/// passes over the trainset run once and are reused by every query.
template <typename Scalar>
class Explainer {
 public:
  Explainer(const LucidModel<Scalar>& model, const Dataset<Scalar>& trainset, std::uint64_t seed)
      : model_(model), trainset_(trainset), seed_(seed) {
    scores_.reserve(trainset.samples.size());
    for (const auto& sample : trainset.samples) {
      const auto result = model_.forward_image(eval_transform(sample.image, model_.config.image_side));
      PerImage rec;
      rec.r_s = result.shapetex.resemblance;
      rec.r_a = result.fused.resemblance;
      rec.argmax_s = result.shapetex.argmax;
      rec.argmax_a = result.fused.argmax;
      scores_.push_back(std::move(rec));
    }
  }

  const LucidModel<Scalar>& model() const { return model_; }
  const Dataset<Scalar>& trainset() const { return trainset_; }

  /// Top training patches for prototype (k, m): five grayscale by branch
  /// resemblance, ten colored by aggregated resemblance, plus the color bar.
  const MinedPrototype& prototype(int k, int m) {
    const auto key = std::make_pair(k, m);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    MinedPrototype mined;
    mined.gray = top_patches(k, m, /*aggregated=*/false, kGrayPatchCount);
    mined.color = top_patches(k, m, /*aggregated=*/true, kColorPatchCount);
    mined.complete = mined.gray.size() == kGrayPatchCount && mined.color.size() == kColorPatchCount;
    mined.bar = build_color_bar(mined.color, k, m);
    return cache_.emplace(key, std::move(mined)).first->second;
  }

  /// Record for the model's own prediction on `image`.
  ExplanationRecord local(const Image<Scalar>& image, const std::string& image_id) {
    const auto result = model_.forward_image(eval_transform(image, model_.config.image_side));
    const int predicted = predict_class(result.fused.class_scores);
    return record_for(result, predicted, image_id);
  }

  /// Side-by-side records for two distinct classes on the same image; entry i
  /// of both records refers to object part i.
  std::pair<ExplanationRecord, ExplanationRecord> comparison(const Image<Scalar>& image,
                                                             const std::string& image_id, int class_a,
                                                             int class_b) {
    if (class_a == class_b)
      throw std::invalid_argument("comparison_explanation: classes must be distinct");
    if (class_a < 0 || class_b < 0 || class_a >= model_.config.classes ||
        class_b >= model_.config.classes)
      throw std::invalid_argument("comparison_explanation: class out of range");
    const auto result = model_.forward_image(eval_transform(image, model_.config.image_side));
    return {record_for(result, class_a, image_id), record_for(result, class_b, image_id)};
  }

  /// Prototype sheets describing class m without any query image.
  std::vector<PartExplanation> global(int m) {
    if (m < 0 || m >= model_.config.classes)
      throw std::invalid_argument("global_characteristic: class out of range");
    std::vector<PartExplanation> sheets;
    for (int k = 0; k < model_.config.parts; ++k) {
      PartExplanation entry;
      entry.part = k;
      entry.prototype = prototype(k, m);
      sheets.push_back(std::move(entry));
    }
    return sheets;
  }

 private:
  struct PerImage {
    Matrix<Scalar> r_s, r_a;
    IndexMatrix argmax_s, argmax_a;
  };

  std::vector<PrototypePatch> top_patches(int k, int m, bool aggregated, int count) {
    std::vector<int> order(scores_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const Scalar sa = aggregated ? scores_[a].r_a(k, m) : scores_[a].r_s(k, m);
      const Scalar sb = aggregated ? scores_[b].r_a(k, m) : scores_[b].r_s(k, m);
      if (sa != sb) return sa > sb;
      return trainset_.samples[a].id < trainset_.samples[b].id;
    });
    if (static_cast<int>(order.size()) > count) order.resize(count);

    const int feat = model_.config.feature_side();
    std::vector<PrototypePatch> patches;
    for (int idx : order) {
      const auto& rec = scores_[idx];
      PrototypePatch patch;
      patch.image_id = trainset_.samples[idx].id;
      const Eigen::Index p = aggregated ? rec.argmax_a(k, m) : rec.argmax_s(k, m);
      patch.feat_row = static_cast<int>(p) / feat;
      patch.feat_col = static_cast<int>(p) % feat;
      const auto rect = patch_rect(patch.feat_row, patch.feat_col, feat, model_.config.image_side);
      patch.x0 = rect[0];
      patch.y0 = rect[1];
      patch.x1 = rect[2];
      patch.y1 = rect[3];
      patch.score = static_cast<double>(aggregated ? rec.r_a(k, m) : rec.r_s(k, m));
      patch.variant = aggregated ? PrototypePatch::Variant::kColor : PrototypePatch::Variant::kGrayscale;
      patches.push_back(std::move(patch));
    }
    return patches;
  }

  /// RGB values sampled from cells of high aggregated activation inside each
  /// patch, embedded to 1-D and ordered by the embedding coordinate.
  ColorBar build_color_bar(const std::vector<PrototypePatch>& color_patches, int k, int m) {
    ColorBar bar;
    if (color_patches.empty()) return bar;
    const int feat = model_.config.feature_side();
    const int side = model_.config.image_side;
    const int cell = side / feat;
    const Eigen::Index channel = static_cast<Eigen::Index>(k) * model_.config.classes + m;

    std::vector<std::array<double, 3>> colors;
    for (const auto& patch : color_patches) {
      bar.source_patch_ids.push_back(patch.image_id);
      const auto& sample = sample_by_id(patch.image_id);
      const Image<Scalar> image = eval_transform(sample.image, side);
      const auto fwd = model_.forward_image(image);

      // cells of the patch with aggregated activation near the patch maximum
      const int r0 = std::max(0, patch.feat_row - kPatchMarginCells);
      const int c0 = std::max(0, patch.feat_col - kPatchMarginCells);
      const int r1 = std::min(feat - 1, patch.feat_row + kPatchMarginCells);
      const int c1 = std::min(feat - 1, patch.feat_col + kPatchMarginCells);
      Scalar peak = 0;
      for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) peak = std::max(peak, fwd.fused.z.at(channel, r, c));
      std::vector<std::pair<int, int>> cells;
      for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c)
          if (fwd.fused.z.at(channel, r, c) >= Scalar(kBarCellThreshold) * peak) cells.emplace_back(r, c);
      if (cells.empty())
        for (int r = r0; r <= r1; ++r)
          for (int c = c0; c <= c1; ++c) cells.emplace_back(r, c);

      std::vector<std::array<double, 3>> pixels;
      for (const auto& [r, c] : cells)
        for (int y = r * cell; y < (r + 1) * cell; ++y)
          for (int x = c * cell; x < (c + 1) * cell; ++x)
            pixels.push_back({static_cast<double>(image.at(0, y, x)),
                              static_cast<double>(image.at(1, y, x)),
                              static_cast<double>(image.at(2, y, x))});

      Rng rng(derive_seed(seed_, fnv1a64(patch.image_id)));
      if (static_cast<int>(pixels.size()) > kBarSamplesPerPatch) {
        for (int i = 0; i < kBarSamplesPerPatch; ++i) {
          const int j = i + rng.uniform_int(static_cast<int>(pixels.size()) - i);
          std::swap(pixels[i], pixels[j]);
        }
        pixels.resize(kBarSamplesPerPatch);
      }
      colors.insert(colors.end(), pixels.begin(), pixels.end());
    }

    Matrix<double> points(static_cast<Eigen::Index>(colors.size()), 3);
    for (std::size_t i = 0; i < colors.size(); ++i)
      points.row(static_cast<Eigen::Index>(i)) << colors[i][0], colors[i][1], colors[i][2];
    const auto coords = tsne_embed_1d(points, derive_seed(seed_, 0xBA7ull));

    std::vector<int> order(colors.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return coords[a] < coords[b]; });
    for (int idx : order) bar.swatches.push_back(colors[idx]);
    return bar;
  }

  ExplanationRecord record_for(const ForwardResult<Scalar>& result, int target_class,
                               const std::string& image_id) {
    ExplanationRecord record;
    record.image_id = image_id;
    record.predicted_class = target_class;
    record.aggregated_score = static_cast<double>(result.fused.class_scores(target_class));
    const int feat = model_.config.feature_side();
    for (int k = 0; k < model_.config.parts; ++k) {
      PartExplanation entry;
      entry.part = k;
      entry.r_s = static_cast<double>(result.shapetex.resemblance(k, target_class));
      entry.r_c = static_cast<double>(result.color.resemblance(k, target_class));
      entry.r_a = static_cast<double>(result.fused.resemblance(k, target_class));
      entry.r_product = entry.r_s * entry.r_c;
      const Eigen::Index p = result.fused.argmax(k, target_class);
      entry.argmax_row = static_cast<int>(p) / feat;
      entry.argmax_col = static_cast<int>(p) % feat;
      entry.prototype = prototype(k, target_class);
      record.parts.push_back(std::move(entry));
    }
    return record;
  }

  const ImageSample<Scalar>& sample_by_id(const std::string& id) const {
    for (const auto& sample : trainset_.samples)
      if (sample.id == id) return sample;
    throw std::out_of_range("explainer: unknown training image " + id);
  }

  const LucidModel<Scalar>& model_;
  const Dataset<Scalar>& trainset_;
  std::uint64_t seed_;
  std::vector<PerImage> scores_;
  std::map<std::pair<int, int>, MinedPrototype> cache_;
};

}  // namespace lucid
