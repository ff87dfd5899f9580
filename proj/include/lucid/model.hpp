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
#include <vector>

#include "lucid/augment.hpp"
#include "lucid/branches.hpp"
#include "lucid/fusion.hpp"
#include "lucid/image.hpp"
#include "lucid/rng.hpp"

namespace lucid {

struct ModelConfig {
  int parts = 2;
  int classes = 4;
  int image_side = 64;
  BackboneConfig backbone;
  ColorNetConfig colornet;

  int feature_side() const { return image_side / backbone.reduction(); }
};

template <typename Scalar>
struct ModelInputs {
  Image<Scalar> gray;   // normalized grayscale at image resolution
  Image<Scalar> color;  // raw RGB downscaled to feature resolution
};

template <typename Scalar>
struct ForwardResult {
  ShapeTexOutputs<Scalar> shapetex;
  ColorOutputs<Scalar> color;
  FusedOutputs<Scalar> fused;
};

template <typename Scalar>
struct ForwardTrace {
  ShapeTexTrace<Scalar> shapetex;
  ColorTrace<Scalar> color;
};

/// The full two-branch model. Forward passes are pure given fixed parameters;
/// the trainer is the only mutator between passes.
template <typename Scalar>
struct LucidModel {
  ModelConfig config;
  ShapeTexNet<Scalar> shapetex;
  ColorNet<Scalar> colornet;

  void init(const ModelConfig& cfg, Rng& rng) {
    config = cfg;
    if (cfg.image_side % cfg.backbone.reduction() != 0)
      throw std::invalid_argument("model: image side must be divisible by the backbone reduction");
    shapetex.init(cfg.parts, cfg.classes, cfg.backbone, rng);
    colornet.init(cfg.parts, cfg.classes, cfg.colornet, rng);
  }

  /// Split a raw RGB image (already at image_side) into the two branch inputs.
  ModelInputs<Scalar> prepare(const Image<Scalar>& image) const {
    if (image.height != config.image_side || image.width != config.image_side)
      throw std::invalid_argument("model: input must be at the configured resolution");
    ModelInputs<Scalar> in;
    in.gray = normalize_grayscale(to_grayscale(image));
    in.color = downscale_color(image, config.feature_side(), config.feature_side());
    return in;
  }

  ForwardResult<Scalar> forward(const ModelInputs<Scalar>& in, ForwardTrace<Scalar>* trace = nullptr) const {
    ForwardResult<Scalar> out;
    out.shapetex = shapetex.forward(in.gray, trace ? &trace->shapetex : nullptr);
    out.color = colornet.forward(in.color, trace ? &trace->color : nullptr);
    out.fused = fuse(out.shapetex.z, out.color.z, config.parts, config.classes);
    return out;
  }

  ForwardResult<Scalar> forward_image(const Image<Scalar>& image) const { return forward(prepare(image)); }

  void zero_grad() {
    shapetex.zero_grad();
    colornet.zero_grad();
  }

  std::vector<ParamView<Scalar>> parameters() {
    std::vector<ParamView<Scalar>> out;
    shapetex.collect(out);
    colornet.collect(out);
    return out;
  }
};

}  // namespace lucid
