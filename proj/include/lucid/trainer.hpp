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

#include <cmath>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>
#include <vector>

#include "lucid/augment.hpp"
#include "lucid/dataset.hpp"
#include "lucid/losses.hpp"
#include "lucid/model.hpp"
#include "lucid/optimizer.hpp"
#include "lucid/rng.hpp"

namespace lucid {

template <typename Scalar>
struct TrainConfig {
  int epochs = 40;
  int batch_size = 64;
  Scalar lr_shapetex = Scalar(0.002);
  Scalar lr_shapetex_late = Scalar(0.0002);
  int lr_decay_epoch = 15;
  Scalar lr_colornet = Scalar(0.002);
  int freeze_epochs = 15;    // backbone warm-up freeze
  int colornet_delay = 0;    // epochs before the color branch starts training
  LossWeights<Scalar> weights;
  AdamWConfig<Scalar> adamw;
  std::uint64_t seed = 1;
  bool augment = true;
};

template <typename Scalar>
void validate_train_config(const TrainConfig<Scalar>& cfg) {
  if (cfg.epochs <= 0) throw std::invalid_argument("train: epochs must be positive");
  if (cfg.batch_size <= 0) throw std::invalid_argument("train: batch size must be positive");
  if (cfg.colornet_delay < 0 || cfg.colornet_delay >= cfg.epochs)
    throw std::invalid_argument("train: colornet delay must be in [0, epochs)");
  if (cfg.freeze_epochs < 0 || cfg.freeze_epochs > cfg.epochs)
    throw std::invalid_argument("train: freeze epochs must be in [0, epochs]");
}

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct TrainResult {
  std::vector<LossBreakdown<Scalar>> epoch_loss;  // sample-mean per epoch
  std::uint64_t rng_digest = 0;
  int epochs_run = 0;
};

/// Learning rate of the shape/texture branch at a given epoch: the initial
/// rate before the decay epoch, the lowered rate from then on.
template <typename Scalar>
Scalar shapetex_lr_at(const TrainConfig<Scalar>& cfg, int epoch) {
  return epoch < cfg.lr_decay_epoch ? cfg.lr_shapetex : cfg.lr_shapetex_late;
}

/// Joint optimization of both branches. With a delayed color start the loop
/// runs `epochs + delay` epochs so the color branch still receives its full
/// epoch budget; the shape/texture branch trains throughout.
///
/// Per-step log lines (when `log` is given): `step,l_d,l_s,l_a,total`.
template <typename Scalar>
TrainResult<Scalar> train(LucidModel<Scalar>& model, const Dataset<Scalar>& data,
                          const TrainConfig<Scalar>& cfg, std::ostream* log = nullptr) {
  validate_train_config(cfg);
  if (data.samples.empty()) throw std::invalid_argument("train: empty dataset");
  for (const auto& sample : data.samples) mask_for(data, sample.id);  // fail fast on missing masks

  const int side = model.config.image_side;
  const int feat = model.config.feature_side();
  const int parts = model.config.parts;
  const int classes = model.config.classes;

  auto params = model.parameters();
  AdamW<Scalar> optimizer(params, cfg.adamw);
  Rng shuffle_rng(derive_seed(cfg.seed, 1));
  Rng augment_rng(derive_seed(cfg.seed, 2));

  const int total_epochs = cfg.epochs + cfg.colornet_delay;
  TrainResult<Scalar> result;
  long step = 0;

  std::vector<int> order(data.samples.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < total_epochs; ++epoch) {
    std::set<ParamGroup> frozen;
    if (epoch < cfg.freeze_epochs) frozen.insert(ParamGroup::kShapeTexBackbone);
    if (epoch < cfg.colornet_delay) frozen.insert(ParamGroup::kColorNet);
    const std::map<ParamGroup, Scalar> lr = {
        {ParamGroup::kShapeTexBackbone, shapetex_lr_at(cfg, epoch)},
        {ParamGroup::kShapeTexHead, shapetex_lr_at(cfg, epoch)},
        {ParamGroup::kColorNet, cfg.lr_colornet},
    };

    shuffle_rng.shuffle(order);
    LossBreakdown<Scalar> epoch_sum;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const Scalar scale = Scalar(1) / Scalar(end - begin);
      model.zero_grad();
      LossBreakdown<Scalar> batch_sum;
      for (std::size_t i = begin; i < end; ++i) {
        const auto& sample = data.samples[order[i]];
        const auto& raw_mask = mask_for(data, sample.id);

        Image<Scalar> image;
        PartMaskSet<Scalar> mask;
        if (cfg.augment) {
          const AugmentPlan plan =
              sample_augment_plan(augment_rng, sample.image.height, sample.image.width, side);
          image = apply_augment(plan, sample.image);
          mask = resize_masks(apply_augment(plan, raw_mask), feat, feat);
        } else {
          image = eval_transform(sample.image, side);
          mask = resize_masks(raw_mask, feat, feat);
        }

        const ModelInputs<Scalar> inputs = model.prepare(image);
        ForwardTrace<Scalar> trace;
        const ForwardResult<Scalar> fwd = model.forward(inputs, &trace);
        LossGrads<Scalar> grads = loss_and_gradients(fwd.shapetex, fwd.color, fwd.fused, mask,
                                                     sample.label, parts, classes, cfg.weights);
        batch_sum.l_d += grads.breakdown.l_d;
        batch_sum.l_s += grads.breakdown.l_s;
        batch_sum.l_a += grads.breakdown.l_a;
        batch_sum.total += grads.breakdown.total;

        grads.dz_s *= scale;
        grads.dz_c *= scale;
        model.shapetex.backward(trace.shapetex, grads.dz_s, epoch >= cfg.freeze_epochs);
        if (epoch >= cfg.colornet_delay) model.colornet.backward(trace.color, grads.dz_c);
      }
      batch_sum.l_d *= scale;
      batch_sum.l_s *= scale;
      batch_sum.l_a *= scale;
      batch_sum.total *= scale;
      if (!std::isfinite(batch_sum.total))
        throw TrainingDiverged("non-finite loss at step " + std::to_string(step) +
                               " (l_d=" + std::to_string(batch_sum.l_d) +
                               ", l_s=" + std::to_string(batch_sum.l_s) +
                               ", l_a=" + std::to_string(batch_sum.l_a) + ")");

      optimizer.step(params, lr, frozen);
      if (log)
        (*log) << step << ',' << batch_sum.l_d << ',' << batch_sum.l_s << ',' << batch_sum.l_a << ','
               << batch_sum.total << '\n';
      ++step;

      const Scalar weight = Scalar(end - begin) / Scalar(order.size());
      epoch_sum.l_d += weight * batch_sum.l_d;
      epoch_sum.l_s += weight * batch_sum.l_s;
      epoch_sum.l_a += weight * batch_sum.l_a;
      epoch_sum.total += weight * batch_sum.total;
    }
    result.epoch_loss.push_back(epoch_sum);
  }
  result.epochs_run = total_epochs;
  result.rng_digest = splitmix64(shuffle_rng.state_digest() ^ augment_rng.state_digest());
  return result;
}

}  // namespace lucid
