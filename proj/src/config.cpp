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

#include "lucid/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace lucid {

namespace {

using nlohmann::json;

void reject_unknown(const json& node, const std::set<std::string>& allowed, const std::string& path) {
  for (const auto& [key, value] : node.items())
    if (!allowed.count(key)) throw ConfigError("unknown config key: " + path + key);
}

template <typename T>
void read(const json& node, const char* key, T& out) {
  if (node.contains(key)) node.at(key).get_to(out);
}

void parse_synthetic(const json& node, SyntheticConfig& out) {
  reject_unknown(node,
                 {"classes", "parts", "canvas", "mode", "table", "seed", "train_per_class",
                  "test_per_class", "luminance", "saturation"},
                 "data.synthetic.");
  read(node, "classes", out.classes);
  read(node, "parts", out.parts);
  read(node, "canvas", out.canvas);
  read(node, "mode", out.mode);
  read(node, "seed", out.seed);
  read(node, "train_per_class", out.train_per_class);
  read(node, "test_per_class", out.test_per_class);
  read(node, "luminance", out.luminance);
  read(node, "saturation", out.saturation);
  if (out.mode != "color_only" && out.mode != "shape_only" && out.mode != "custom")
    throw ConfigError("data.synthetic.mode must be color_only, shape_only or custom");
  if (node.contains("table")) {
    for (const auto& row : node.at("table")) {
      std::vector<PartAppearance> parts;
      for (const auto& cell : row) {
        reject_unknown(cell, {"shape", "texture", "hue"}, "data.synthetic.table[].");
        PartAppearance part;
        read(cell, "shape", part.shape_id);
        read(cell, "texture", part.texture_id);
        read(cell, "hue", part.hue_degrees);
        parts.push_back(part);
      }
      out.table.push_back(std::move(parts));
    }
  }
  if (out.mode == "custom" && out.table.empty())
    throw ConfigError("data.synthetic.table is required for mode custom");
}

void parse_data(const json& node, DataConfig& out) {
  reject_unknown(node,
                 {"source", "train_dir", "test_dir", "mask_source", "mask_dir", "image_side",
                  "synthetic"},
                 "data.");
  read(node, "source", out.source);
  read(node, "train_dir", out.train_dir);
  read(node, "test_dir", out.test_dir);
  read(node, "mask_source", out.mask_source);
  read(node, "mask_dir", out.mask_dir);
  read(node, "image_side", out.image_side);
  if (node.contains("synthetic")) parse_synthetic(node.at("synthetic"), out.synthetic);
  if (out.source != "synthetic" && out.source != "folders")
    throw ConfigError("data.source must be synthetic or folders");
  if (out.mask_source != "oracle" && out.mask_source != "files")
    throw ConfigError("data.mask_source must be oracle or files");
  if (out.source == "folders" && out.train_dir.empty())
    throw ConfigError("data.train_dir is required for source folders");
  if (out.source == "folders" && out.mask_source == "oracle")
    throw ConfigError("data.mask_source oracle requires a synthetic source");
  if (out.image_side <= 0) throw ConfigError("data.image_side must be positive");
}

void parse_model(const json& node, ModelOptions& out) {
  reject_unknown(node,
                 {"backbone", "backbone_channels", "backbone_strides", "colornet_widths", "parts"},
                 "model.");
  read(node, "backbone", out.backbone);
  read(node, "backbone_channels", out.backbone_channels);
  read(node, "backbone_strides", out.backbone_strides);
  read(node, "colornet_widths", out.colornet_widths);
  read(node, "parts", out.parts);
  if (out.backbone != "desk_cnn" && out.backbone != "convnext_tiny_modified")
    throw ConfigError("model.backbone must be desk_cnn or convnext_tiny_modified");
  if (out.backbone_channels.size() != out.backbone_strides.size())
    throw ConfigError("model.backbone_channels and model.backbone_strides must align");
  if (out.backbone_channels.empty()) throw ConfigError("model.backbone_channels must not be empty");
  if (out.parts < 1) throw ConfigError("model.parts must be at least 1");
}

void parse_train(const json& node, TrainOptions& out) {
  reject_unknown(node,
                 {"epochs", "batch_size", "lr_shapetex", "lr_shapetex_late", "lr_decay_epoch",
                  "lr_colornet", "freeze_epochs", "colornet_delay", "alpha_d", "alpha_s", "alpha_a",
                  "augment"},
                 "train.");
  read(node, "epochs", out.epochs);
  read(node, "batch_size", out.batch_size);
  read(node, "lr_shapetex", out.lr_shapetex);
  read(node, "lr_shapetex_late", out.lr_shapetex_late);
  read(node, "lr_decay_epoch", out.lr_decay_epoch);
  read(node, "lr_colornet", out.lr_colornet);
  read(node, "freeze_epochs", out.freeze_epochs);
  read(node, "colornet_delay", out.colornet_delay);
  read(node, "alpha_d", out.alpha_d);
  read(node, "alpha_s", out.alpha_s);
  read(node, "alpha_a", out.alpha_a);
  read(node, "augment", out.augment);
  if (out.alpha_d < 0 || out.alpha_s < 0 || out.alpha_a < 0)
    throw ConfigError("train: loss weights must be non-negative");
}

void parse_eval(const json& node, EvalOptions& out) {
  reject_unknown(node, {"hue_perturb", "hue_seed", "with_iou"}, "eval.");
  read(node, "hue_perturb", out.hue_perturb);
  read(node, "hue_seed", out.hue_seed);
  read(node, "with_iou", out.with_iou);
}

json synthetic_to_json(const SyntheticConfig& config) {
  json node{{"classes", config.classes},
            {"parts", config.parts},
            {"canvas", config.canvas},
            {"mode", config.mode},
            {"seed", config.seed},
            {"train_per_class", config.train_per_class},
            {"test_per_class", config.test_per_class},
            {"luminance", config.luminance},
            {"saturation", config.saturation}};
  if (!config.table.empty()) {
    json table = json::array();
    for (const auto& row : config.table) {
      json cells = json::array();
      for (const auto& part : row)
        cells.push_back(
            {{"shape", part.shape_id}, {"texture", part.texture_id}, {"hue", part.hue_degrees}});
      table.push_back(cells);
    }
    node["table"] = table;
  }
  return node;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(root, {"seed", "out", "data", "model", "train", "eval"}, "");
  RunConfig config;
  read(root, "seed", config.seed);
  read(root, "out", config.out);
  if (root.contains("data")) parse_data(root.at("data"), config.data);
  if (root.contains("model")) parse_model(root.at("model"), config.model);
  if (root.contains("train")) parse_train(root.at("train"), config.train);
  if (root.contains("eval")) parse_eval(root.at("eval"), config.eval);

  TrainConfig<double> probe = train_config_from(config);
  validate_train_config(probe);
  if (config.data.source == "synthetic" && config.data.synthetic.parts != config.model.parts)
    throw ConfigError("model.parts must match data.synthetic.parts");
  return config;
}

RunConfig load_run_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

// The output directory is deliberately not part of the canonical form: two
// runs that differ only in where they write are the same run.
std::string canonical_config_json(const RunConfig& config) {
  json root;
  root["seed"] = config.seed;
  root["data"] = {{"source", config.data.source},
                  {"train_dir", config.data.train_dir},
                  {"test_dir", config.data.test_dir},
                  {"mask_source", config.data.mask_source},
                  {"mask_dir", config.data.mask_dir},
                  {"image_side", config.data.image_side},
                  {"synthetic", synthetic_to_json(config.data.synthetic)}};
  root["model"] = {{"backbone", config.model.backbone},
                   {"backbone_channels", config.model.backbone_channels},
                   {"backbone_strides", config.model.backbone_strides},
                   {"colornet_widths", config.model.colornet_widths},
                   {"parts", config.model.parts}};
  root["train"] = {{"epochs", config.train.epochs},
                   {"batch_size", config.train.batch_size},
                   {"lr_shapetex", config.train.lr_shapetex},
                   {"lr_shapetex_late", config.train.lr_shapetex_late},
                   {"lr_decay_epoch", config.train.lr_decay_epoch},
                   {"lr_colornet", config.train.lr_colornet},
                   {"freeze_epochs", config.train.freeze_epochs},
                   {"colornet_delay", config.train.colornet_delay},
                   {"alpha_d", config.train.alpha_d},
                   {"alpha_s", config.train.alpha_s},
                   {"alpha_a", config.train.alpha_a},
                   {"augment", config.train.augment}};
  root["eval"] = {{"hue_perturb", config.eval.hue_perturb},
                  {"hue_seed", config.eval.hue_seed},
                  {"with_iou", config.eval.with_iou}};
  return root.dump(2) + "\n";
}

SyntheticSpec synthetic_spec_from(const SyntheticConfig& config) {
  SyntheticSpec spec;
  if (config.mode == "color_only")
    spec = color_only_spec(config.classes, config.parts, config.canvas, config.seed);
  else if (config.mode == "shape_only")
    spec = shape_only_spec(config.classes, config.parts, config.canvas, config.seed);
  else {
    spec.classes = config.classes;
    spec.parts = config.parts;
    spec.canvas = config.canvas;
    spec.seed = config.seed;
    spec.table = config.table;
  }
  spec.luminance = config.luminance;
  spec.saturation = config.saturation;
  return spec;
}

ModelConfig model_config_from(const RunConfig& config, int classes) {
  if (config.model.backbone != "desk_cnn")
    throw ConfigError("backbone " + config.model.backbone +
                      " requires pretrained weights that are not bundled; use desk_cnn");
  ModelConfig model;
  model.parts = config.model.parts;
  model.classes = classes;
  model.image_side = config.data.image_side;
  model.backbone.channels = config.model.backbone_channels;
  model.backbone.strides = config.model.backbone_strides;
  model.colornet.hidden = config.model.colornet_widths;
  if (model.image_side % model.backbone.reduction() != 0)
    throw ConfigError("data.image_side must be divisible by the backbone stride product");
  return model;
}

TrainConfig<double> train_config_from(const RunConfig& config) {
  TrainConfig<double> train;
  train.epochs = config.train.epochs;
  train.batch_size = config.train.batch_size;
  train.lr_shapetex = config.train.lr_shapetex;
  train.lr_shapetex_late = config.train.lr_shapetex_late;
  train.lr_decay_epoch = config.train.lr_decay_epoch;
  train.lr_colornet = config.train.lr_colornet;
  train.freeze_epochs = std::min(config.train.freeze_epochs, config.train.epochs);
  train.colornet_delay = config.train.colornet_delay;
  train.weights.alpha_d = config.train.alpha_d;
  train.weights.alpha_s = config.train.alpha_s;
  train.weights.alpha_a = config.train.alpha_a;
  train.seed = config.seed;
  train.augment = config.train.augment;
  return train;
}

LoadedData load_data(const RunConfig& config) {
  LoadedData out;
  if (config.data.source == "synthetic") {
    const SyntheticSpec spec = synthetic_spec_from(config.data.synthetic);
    out.train = to_dataset(generate_synthetic(spec, config.data.synthetic.train_per_class, "train"));
    out.test = to_dataset(generate_synthetic(spec, config.data.synthetic.test_per_class, "test"));
    if (config.data.mask_source == "files") {
      if (config.data.mask_dir.empty())
        throw ConfigError("data.mask_dir is required for mask_source files");
      for (auto& [id, mask] : out.train.masks)
        mask = load_masks((std::filesystem::path(config.data.mask_dir) / (id + ".lppm")).string());
    }
  } else {
    const std::string mask_dir = config.data.mask_source == "files" ? config.data.mask_dir : "";
    if (config.data.mask_source == "files" && mask_dir.empty())
      throw ConfigError("data.mask_dir is required for mask_source files");
    out.train = load_folder_dataset(config.data.train_dir, mask_dir);
    if (!config.data.test_dir.empty())
      out.test = load_folder_dataset(config.data.test_dir, "");
    else
      out.test = out.train;
  }
  return out;
}

}  // namespace lucid
