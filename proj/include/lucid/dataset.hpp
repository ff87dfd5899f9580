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
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "lucid/imageio.hpp"
#include "lucid/masks.hpp"
#include "lucid/synthetic.hpp"
#include "lucid/types.hpp"

namespace lucid {

template <typename Scalar>
struct Dataset {
  std::vector<ImageSample<Scalar>> samples;
  std::map<std::string, PartMaskSet<Scalar>> masks;  // source resolution
  std::vector<std::string> class_names;

  int classes() const { return static_cast<int>(class_names.size()); }
};

template <typename Scalar>
Dataset<Scalar> to_dataset(SyntheticDataset<Scalar>&& synthetic) {
  Dataset<Scalar> out;
  out.samples = std::move(synthetic.samples);
  out.masks = std::move(synthetic.masks);
  out.class_names = std::move(synthetic.class_names);
  return out;
}

template <typename Scalar>
const PartMaskSet<Scalar>& mask_for(const Dataset<Scalar>& data, const std::string& id) {
  const auto it = data.masks.find(id);
  if (it == data.masks.end()) throw std::out_of_range("masks not found for image " + id);
  return it->second;
}

/// Directory layout: root/<class_name>/<image>.{png,jpg}; class order is
/// lexicographic. When `mask_dir` is set, a <image id>.lppm file is loaded
/// per image.
inline Dataset<double> load_folder_dataset(const std::string& root, const std::string& mask_dir = "") {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw std::runtime_error("dataset root not found: " + root);
  if (!mask_dir.empty() && !fs::is_directory(mask_dir))
    throw std::runtime_error("masks not found: " + mask_dir);

  Dataset<double> out;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) out.class_names.push_back(entry.path().filename().string());
  std::sort(out.class_names.begin(), out.class_names.end());
  if (out.class_names.empty()) throw std::runtime_error("dataset has no class directories: " + root);

  for (int label = 0; label < static_cast<int>(out.class_names.size()); ++label) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(fs::path(root) / out.class_names[label])) {
      const std::string ext = entry.path().extension().string();
      if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      ImageSample<double> sample;
      sample.image = read_image(file.string());
      sample.label = label;
      sample.id = out.class_names[label] + "/" + file.stem().string();
      if (!mask_dir.empty()) {
        const fs::path mask_path = fs::path(mask_dir) / (sample.id + ".lppm");
        if (!fs::exists(mask_path))
          throw std::runtime_error("masks not found: " + mask_path.string());
        out.masks.emplace(sample.id, load_masks(mask_path.string()));
      }
      out.samples.push_back(std::move(sample));
    }
  }
  return out;
}

/// Write a dataset in the folder layout plus one .lppm mask per image.
inline void export_dataset(const Dataset<double>& data, const std::string& image_root,
                           const std::string& mask_root) {
  namespace fs = std::filesystem;
  for (const auto& sample : data.samples) {
    const fs::path img_path = fs::path(image_root) / (sample.id + ".png");
    fs::create_directories(img_path.parent_path());
    write_image_png(img_path.string(), sample.image);
    const auto it = data.masks.find(sample.id);
    if (it != data.masks.end()) {
      const fs::path mask_path = fs::path(mask_root) / (sample.id + ".lppm");
      fs::create_directories(mask_path.parent_path());
      save_masks(it->second, mask_path.string());
    }
  }
}

}  // namespace lucid
