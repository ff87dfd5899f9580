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

#include "lucid/explain_render.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lucid/image.hpp"

namespace lucid {

namespace {

constexpr int kTile = 48;    // rendered patch side in pixels
constexpr int kPad = 4;
constexpr int kBarWidth = 2 * kTile;

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void patch_json(std::ostringstream& os, const PrototypePatch& patch) {
  os << "{\"image_id\":\"" << patch.image_id << "\",\"cell\":[" << patch.feat_row << ','
     << patch.feat_col << "],\"rect\":[" << patch.x0 << ',' << patch.y0 << ',' << patch.x1 << ','
     << patch.y1 << "],\"score\":" << fmt6(patch.score) << '}';
}

void part_json(std::ostringstream& os, const PartExplanation& entry, bool with_scores) {
  os << "{\"part\":" << entry.part;
  if (with_scores) {
    os << ",\"r_s\":" << fmt6(entry.r_s) << ",\"r_c\":" << fmt6(entry.r_c)
       << ",\"r_a\":" << fmt6(entry.r_a) << ",\"r_s_times_r_c\":" << fmt6(entry.r_product)
       << ",\"argmax\":[" << entry.argmax_row << ',' << entry.argmax_col << ']';
  }
  os << ",\"complete\":" << (entry.prototype.complete ? "true" : "false") << ",\"gray_patches\":[";
  for (std::size_t i = 0; i < entry.prototype.gray.size(); ++i) {
    if (i) os << ',';
    patch_json(os, entry.prototype.gray[i]);
  }
  os << "],\"color_patches\":[";
  for (std::size_t i = 0; i < entry.prototype.color.size(); ++i) {
    if (i) os << ',';
    patch_json(os, entry.prototype.color[i]);
  }
  os << "],\"color_bar\":[";
  for (std::size_t i = 0; i < entry.prototype.bar.swatches.size(); ++i) {
    if (i) os << ',';
    const auto& s = entry.prototype.bar.swatches[i];
    os << '[' << fmt6(s[0]) << ',' << fmt6(s[1]) << ',' << fmt6(s[2]) << ']';
  }
  os << "]}";
}

void record_json(std::ostringstream& os, const ExplanationRecord& record,
                 const std::vector<std::string>& class_names) {
  os << "{\"image_id\":\"" << record.image_id << "\",\"class\":" << record.predicted_class
     << ",\"class_name\":\"" << class_names.at(record.predicted_class)
     << "\",\"aggregated_score\":" << fmt6(record.aggregated_score) << ",\"parts\":[";
  for (std::size_t i = 0; i < record.parts.size(); ++i) {
    if (i) os << ',';
    part_json(os, record.parts[i], true);
  }
  os << "]}";
}

void fill_rect(Raster& canvas, int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g,
               std::uint8_t b) {
  for (int y = std::max(0, y0); y < std::min(canvas.height, y1); ++y)
    for (int x = std::max(0, x0); x < std::min(canvas.width, x1); ++x) {
      auto* px = canvas.pixel(y, x);
      px[0] = r;
      px[1] = g;
      px[2] = b;
    }
}

/// Nearest-neighbor blit of an image rectangle into a kTile x kTile slot.
void blit_patch(Raster& canvas, int dst_x, int dst_y, const Image<double>& source,
                const PrototypePatch& patch) {
  const int w = std::max(1, patch.x1 - patch.x0);
  const int h = std::max(1, patch.y1 - patch.y0);
  for (int y = 0; y < kTile; ++y)
    for (int x = 0; x < kTile; ++x) {
      const int sx = std::min(source.width - 1, patch.x0 + x * w / kTile);
      const int sy = std::min(source.height - 1, patch.y0 + y * h / kTile);
      auto* px = canvas.pixel(dst_y + y, dst_x + x);
      for (int c = 0; c < 3; ++c)
        px[c] = static_cast<std::uint8_t>(std::lround(std::clamp(source.at(c, sy, sx), 0.0, 1.0) * 255));
    }
}

void blit_bar(Raster& canvas, int dst_x, int dst_y, const ColorBar& bar) {
  if (bar.swatches.empty()) {
    fill_rect(canvas, dst_x, dst_y, dst_x + kBarWidth, dst_y + kTile, 30, 30, 30);
    return;
  }
  const int n = static_cast<int>(bar.swatches.size());
  for (int x = 0; x < kBarWidth; ++x) {
    const auto& s = bar.swatches[std::min(n - 1, x * n / kBarWidth)];
    for (int y = 0; y < kTile; ++y) {
      auto* px = canvas.pixel(dst_y + y, dst_x + x);
      for (int c = 0; c < 3; ++c)
        px[c] = static_cast<std::uint8_t>(std::lround(std::clamp(s[c], 0.0, 1.0) * 255));
    }
  }
}

const ImageSample<double>& train_sample(Explainer<double>& explainer, const std::string& id) {
  for (const auto& sample : explainer.trainset().samples)
    if (sample.id == id) return sample;
  throw std::out_of_range("render: unknown training image " + id);
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

std::string explanation_to_json(const ExplanationRecord& record,
                                const std::vector<std::string>& class_names) {
  std::ostringstream os;
  record_json(os, record, class_names);
  os << '\n';
  return os.str();
}

std::string comparison_to_json(const ExplanationRecord& a, const ExplanationRecord& b,
                               const std::vector<std::string>& class_names) {
  std::ostringstream os;
  os << "{\"first\":";
  record_json(os, a, class_names);
  os << ",\"second\":";
  record_json(os, b, class_names);
  os << "}\n";
  return os.str();
}

std::string global_to_json(int class_id, const std::string& class_name,
                           const std::vector<PartExplanation>& sheets) {
  std::ostringstream os;
  os << "{\"class\":" << class_id << ",\"class_name\":\"" << class_name << "\",\"parts\":[";
  for (std::size_t i = 0; i < sheets.size(); ++i) {
    if (i) os << ',';
    part_json(os, sheets[i], false);
  }
  os << "]}\n";
  return os.str();
}

Raster render_prototype_row(Explainer<double>& explainer, const PartExplanation& entry) {
  const int side = explainer.model().config.image_side;
  const int cols = kGrayPatchCount + kColorPatchCount / 2;
  const int width = kPad + cols * (kTile + kPad) + kBarWidth + kPad;
  Raster row(kTile + 2 * kPad, width, 24);

  int x = kPad;
  for (const auto& patch : entry.prototype.gray) {
    const auto& sample = train_sample(explainer, patch.image_id);
    blit_patch(row, x, kPad, to_grayscale(eval_transform(sample.image, side)), patch);
    x += kTile + kPad;
  }
  blit_bar(row, x, kPad, entry.prototype.bar);
  x += kBarWidth + kPad;
  for (std::size_t i = 0; i < entry.prototype.color.size() && i < kColorPatchCount / 2; ++i) {
    const auto& patch = entry.prototype.color[i];
    const auto& sample = train_sample(explainer, patch.image_id);
    blit_patch(row, x, kPad, eval_transform(sample.image, side), patch);
    x += kTile + kPad;
  }
  return row;
}

Raster render_explanation_sheet(Explainer<double>& explainer, const ExplanationRecord& record) {
  std::vector<Raster> rows;
  for (const auto& entry : record.parts) rows.push_back(render_prototype_row(explainer, entry));
  const int width = rows.empty() ? 1 : rows[0].width;
  const int height = std::max<int>(1, static_cast<int>(rows.size()) * (kTile + 2 * kPad));
  Raster sheet(height, width, 24);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int y = 0; y < rows[i].height; ++y)
      std::copy_n(rows[i].pixel(y, 0), 3 * rows[i].width,
                  sheet.pixel(static_cast<int>(i) * (kTile + 2 * kPad) + y, 0));
  return sheet;
}

void write_local_explanation(Explainer<double>& explainer, const ImageSample<double>& sample,
                             const std::string& out_root) {
  namespace fs = std::filesystem;
  const auto record = explainer.local(sample.image, sample.id);
  const fs::path dir = fs::path(out_root) / "explanations" / sample.id;
  write_text(dir / "local.json", explanation_to_json(record, explainer.trainset().class_names));
  fs::create_directories(dir);
  write_png((dir / "local.png").string(), render_explanation_sheet(explainer, record));
}

void write_global_explanation(Explainer<double>& explainer, int class_id, const std::string& out_root) {
  namespace fs = std::filesystem;
  const auto sheets = explainer.global(class_id);
  const fs::path dir = fs::path(out_root) / "explanations" / ("class_" + std::to_string(class_id));
  fs::create_directories(dir);
  const std::string class_name = explainer.trainset().class_names.at(class_id);
  for (const auto& entry : sheets) {
    const std::string stem = "global_part" + std::to_string(entry.part);
    write_text(dir / (stem + ".json"), global_to_json(class_id, class_name, {entry}));
    Raster row = render_prototype_row(explainer, entry);
    write_png((dir / (stem + ".png")).string(), row);
  }
}

void write_comparison_explanation(Explainer<double>& explainer, const ImageSample<double>& sample,
                                  int class_a, int class_b, const std::string& out_root) {
  namespace fs = std::filesystem;
  const auto [first, second] = explainer.comparison(sample.image, sample.id, class_a, class_b);
  const fs::path dir = fs::path(out_root) / "explanations" /
                       ("compare_" + std::to_string(class_a) + "_" + std::to_string(class_b));
  write_text(dir / "compare.json",
             comparison_to_json(first, second, explainer.trainset().class_names));

  Raster top = render_explanation_sheet(explainer, first);
  Raster bottom = render_explanation_sheet(explainer, second);
  Raster sheet(top.height + bottom.height + kPad, std::max(top.width, bottom.width), 24);
  for (int y = 0; y < top.height; ++y) std::copy_n(top.pixel(y, 0), 3 * top.width, sheet.pixel(y, 0));
  for (int y = 0; y < bottom.height; ++y)
    std::copy_n(bottom.pixel(y, 0), 3 * bottom.width, sheet.pixel(top.height + kPad + y, 0));
  write_png((dir / "compare.png").string(), sheet);
}

}  // namespace lucid
