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

#include <optional>
#include <string>
#include <vector>

#include "lucid/dataset.hpp"
#include "lucid/model.hpp"
#include "lucid/synthetic.hpp"
#include "lucid/trainer.hpp"

namespace lucid {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SyntheticConfig {
  int classes = 4;
  int parts = 2;
  int canvas = 64;
  std::string mode = "color_only";  // color_only | shape_only | custom
  std::vector<std::vector<PartAppearance>> table;  // used by mode "custom"
  std::uint64_t seed = 1;
  int train_per_class = 100;
  int test_per_class = 25;
  double luminance = 0.45;
  double saturation = 0.5;
};

struct DataConfig {
  std::string source = "synthetic";    // synthetic | folders
  std::string train_dir;
  std::string test_dir;
  std::string mask_source = "oracle";  // oracle | files
  std::string mask_dir;
  int image_side = 64;
  SyntheticConfig synthetic;
};

struct ModelOptions {
  std::string backbone = "desk_cnn";   // desk_cnn | convnext_tiny_modified
  std::vector<int> backbone_channels{16, 32, 64, 64};
  std::vector<int> backbone_strides{2, 2, 2, 1};
  std::vector<int> colornet_widths{20, 50, 150, 200, 600};  // hidden layers; K*M output appended
  int parts = 2;
};

struct TrainOptions {
  int epochs = 40;
  int batch_size = 64;
  double lr_shapetex = 0.002;
  double lr_shapetex_late = 0.0002;
  int lr_decay_epoch = 15;
  double lr_colornet = 0.002;
  int freeze_epochs = 15;
  int colornet_delay = 0;
  double alpha_d = 1.4;
  double alpha_s = 1.0;
  double alpha_a = 1.0;
  bool augment = true;
};

struct EvalOptions {
  bool hue_perturb = false;
  std::uint64_t hue_seed = 7;
  bool with_iou = true;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string out = "runs/out";
  DataConfig data;
  ModelOptions model;
  TrainOptions train;
  EvalOptions eval;
};

/// Parse + validate; unknown keys anywhere are rejected with their path.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config_file(const std::string& path);

/// Canonical serialization (sorted keys); its FNV-1a hash identifies the run.
std::string canonical_config_json(const RunConfig& config);

SyntheticSpec synthetic_spec_from(const SyntheticConfig& config);
ModelConfig model_config_from(const RunConfig& config, int classes);
TrainConfig<double> train_config_from(const RunConfig& config);

struct LoadedData {
  Dataset<double> train;
  Dataset<double> test;
};

/// Materialize the configured datasets (in-memory synthetic or folders).
LoadedData load_data(const RunConfig& config);

}  // namespace lucid
