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

#include <string>

#include "lucid/explain.hpp"
#include "lucid/imageio.hpp"

namespace lucid {

/// JSON mirrors of the explanation artifacts; scores carry 6 decimal places
/// and the field order is fixed, so files are byte-stable across runs.
std::string explanation_to_json(const ExplanationRecord& record,
                                const std::vector<std::string>& class_names);
std::string comparison_to_json(const ExplanationRecord& a, const ExplanationRecord& b,
                               const std::vector<std::string>& class_names);
std::string global_to_json(int class_id, const std::string& class_name,
                           const std::vector<PartExplanation>& sheets);

/// Sheet with one row per part: five grayscale patches, the color bar, five
/// colored patches. Grayscale tiles come from the grayscale-converted image,
/// colored tiles from the original.
Raster render_prototype_row(Explainer<double>& explainer, const PartExplanation& entry);
Raster render_explanation_sheet(Explainer<double>& explainer, const ExplanationRecord& record);

/// Output tree: explanations/<image id>/local.{png,json},
/// explanations/class_<m>/global_part<k>.{png,json},
/// explanations/compare_<a>_<b>/compare.{png,json}.
void write_local_explanation(Explainer<double>& explainer, const ImageSample<double>& sample,
                             const std::string& out_root);
void write_global_explanation(Explainer<double>& explainer, int class_id, const std::string& out_root);
void write_comparison_explanation(Explainer<double>& explainer, const ImageSample<double>& sample,
                                  int class_a, int class_b, const std::string& out_root);

}  // namespace lucid
