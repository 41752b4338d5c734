// Copyright 2026 The Overlearn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OVERLEARN_REPORT_REPORT_HPP_
#define OVERLEARN_REPORT_REPORT_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "overlearn/data/image.hpp"
#include "overlearn/probe/matrix.hpp"
#include "overlearn/trust/trust.hpp"

namespace overlearn::report {

struct HeatmapSpec {
  std::string title;
  data::Rgb low = {26, 152, 80};   // green: near chance
  data::Rgb high = {215, 48, 39};  // red: high accuracy
  int precision = 2;
  int cell_px = 72;
};

// Linear ramp from `low` (v = 0) to `high` (v = 1); v is clamped to [0, 1].
data::Rgb RampColor(double v, const HeatmapSpec& spec);

// Standalone SVG: one <rect class="cell"> and one <text class="value"> per
// cell, with task names along both axes. Output is a pure function of the
// inputs.
std::string RenderHeatmap(const trust::Matrix& cells, const std::vector<std::string>& rows,
                          const std::vector<std::string>& cols, const HeatmapSpec& spec);
std::string RenderHeatmap(const probe::PerformanceMatrix& matrix, const HeatmapSpec& spec);

// A suppressed variant reported against the baseline.
struct Comparison {
  std::string label;
  probe::PerformanceMatrix matrix;
};

std::string FormatSummary(const probe::PerformanceMatrix& baseline,
                          const trust::TrustReport& report,
                          const std::vector<Comparison>& comparisons);

// Writes matrix.csv, matrix.json, trust.json, heatmap.svg and summary.md to
// `out_dir`, plus heatmap_<label>.svg for each comparison.
void ExportReport(const probe::PerformanceMatrix& baseline,
                  const std::vector<Comparison>& comparisons,
                  const std::filesystem::path& out_dir);

}  // namespace overlearn::report

#endif  // OVERLEARN_REPORT_REPORT_HPP_
