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

#include "overlearn/report/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "overlearn/common/error.hpp"
#include "overlearn/common/io.hpp"

namespace overlearn::report {

namespace fs = std::filesystem;

namespace {

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string Fixed(double v, int precision) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

std::vector<std::string> Names(const probe::PerformanceMatrix& m) {
  std::vector<std::string> out;
  for (const data::TaskSpec& t : m.tasks) out.push_back(t.name);
  return out;
}

}  // namespace

data::Rgb RampColor(double v, const HeatmapSpec& spec) {
  const double t = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
  auto mix = [t](uint8_t a, uint8_t b) {
    return static_cast<uint8_t>(std::lround(a + (static_cast<double>(b) - a) * t));
  };
  return {mix(spec.low.r, spec.high.r), mix(spec.low.g, spec.high.g),
          mix(spec.low.b, spec.high.b)};
}

std::string RenderHeatmap(const trust::Matrix& cells, const std::vector<std::string>& rows,
                          const std::vector<std::string>& cols, const HeatmapSpec& spec) {
  if (cells.size() != rows.size()) {
    throw Error(ErrorCode::kShapeMismatch, "heatmap row labels do not match");
  }
  for (const auto& r : cells) {
    if (r.size() != cols.size()) {
      throw Error(ErrorCode::kShapeMismatch, "heatmap column labels do not match");
    }
  }
  const int cell = spec.cell_px;
  const int left = 110, top = spec.title.empty() ? 40 : 70;
  const int width = left + cell * static_cast<int>(cols.size()) + 20;
  const int height = top + cell * static_cast<int>(rows.size()) + 40;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
         std::to_string(width) + " " + std::to_string(height) +
         "\" font-family=\"sans-serif\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  if (!spec.title.empty()) {
    svg += "<text class=\"title\" x=\"" + std::to_string(width / 2) +
           "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">" + Escape(spec.title) +
           "</text>\n";
  }
  for (size_t j = 0; j < cols.size(); ++j) {
    const int x = left + cell * static_cast<int>(j) + cell / 2;
    svg += "<text class=\"col-label\" x=\"" + std::to_string(x) + "\" y=\"" +
           std::to_string(top - 8) + "\" text-anchor=\"middle\" font-size=\"12\">" +
           Escape(cols[j]) + "</text>\n";
  }
  for (size_t i = 0; i < rows.size(); ++i) {
    const int y = top + cell * static_cast<int>(i);
    svg += "<text class=\"row-label\" x=\"" + std::to_string(left - 8) + "\" y=\"" +
           std::to_string(y + cell / 2 + 4) + "\" text-anchor=\"end\" font-size=\"12\">" +
           Escape(rows[i]) + "</text>\n";
    for (size_t j = 0; j < cols.size(); ++j) {
      const int x = left + cell * static_cast<int>(j);
      const data::Rgb c = RampColor(cells[i][j], spec);
      char fill[8];
      std::snprintf(fill, sizeof(fill), "#%02x%02x%02x", c.r, c.g, c.b);
      svg += "<rect class=\"cell\" x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) +
             "\" width=\"" + std::to_string(cell) + "\" height=\"" + std::to_string(cell) +
             "\" fill=\"" + fill + "\" stroke=\"#ffffff\"/>\n";
      svg += "<text class=\"value\" x=\"" + std::to_string(x + cell / 2) + "\" y=\"" +
             std::to_string(y + cell / 2 + 5) +
             "\" text-anchor=\"middle\" font-size=\"14\" fill=\"#ffffff\">" +
             Fixed(cells[i][j], spec.precision) + "</text>\n";
    }
  }
  svg += "<text class=\"axis\" x=\"" + std::to_string(left) + "\" y=\"" +
         std::to_string(height - 12) +
         "\" font-size=\"11\">rows: preserved task; columns: probed task</text>\n";
  svg += "</svg>\n";
  return svg;
}

std::string RenderHeatmap(const probe::PerformanceMatrix& matrix, const HeatmapSpec& spec) {
  matrix.Validate();
  const std::vector<std::string> names = Names(matrix);
  return RenderHeatmap(matrix.cells, names, names, spec);
}

std::string FormatSummary(const probe::PerformanceMatrix& baseline,
                          const trust::TrustReport& report,
                          const std::vector<Comparison>& comparisons) {
  const std::vector<std::string> names = Names(baseline);
  std::string md = "# Overlearning report\n\n";
  md += "Trust score: **" + Fixed(report.score, 4) + "** (" +
        std::string(trust::BandName(report.band)) + ")\n\n";
  md += "## Performance matrix\n\nRows: preserved task. Columns: probed task.\n\n|";
  for (const std::string& n : names) md += " | " + n;
  md += " |\n|---";
  for (size_t j = 0; j < names.size(); ++j) md += "|---";
  md += "|\n";
  for (size_t i = 0; i < names.size(); ++i) {
    md += "| " + names[i];
    for (size_t j = 0; j < names.size(); ++j) {
      md += " | " + Fixed(baseline.cells[i][j], 4);
      if (!baseline.chance.empty()) md += " (" + Fixed(baseline.chance[i][j], 2) + ")";
    }
    md += " |\n";
  }
  if (!baseline.chance.empty()) md += "\nParenthesised: majority-class rate of the test split.\n";

  md += "\n## Overlearned cells\n\n";
  if (report.overlearning.empty()) {
    md += "None above the " + Fixed(report.threshold, 2) + " threshold.\n";
  } else {
    md += "Cells exceeding the ideal by more than " + Fixed(report.threshold, 2) + ":\n\n";
    for (const trust::OverlearnedCell& c : report.overlearning) {
      md += "- " + names[c.row] + " -> " + names[c.col] + ": " + Fixed(c.observed, 4) +
            " vs ideal " + Fixed(c.ideal, 4) + "\n";
    }
  }

  if (!comparisons.empty()) {
    md += "\n## Before/after\n\n| variant | trust | delta | largest movers |\n|---|---|---|---|\n";
    for (const Comparison& cmp : comparisons) {
      const trust::TrustReport after = trust::Evaluate(cmp.matrix, report.threshold);
      const trust::TrustDelta d = trust::Delta(report, after);
      std::string movers;
      for (size_t k = 0; k < std::min<size_t>(3, d.cells.size()); ++k) {
        const trust::CellContribution& c = d.cells[k];
        if (c.contribution == 0.0) break;
        if (!movers.empty()) movers += ", ";
        movers += names[c.row] + "->" + names[c.col] + " " +
                  (c.contribution > 0 ? "+" : "") + Fixed(c.contribution, 4);
      }
      md += "| " + cmp.label + " | " + Fixed(after.score, 4) + " | " +
            (d.delta >= 0 ? "+" : "") + Fixed(d.delta, 4) + " | " + movers + " |\n";
    }
  }
  return md;
}

void ExportReport(const probe::PerformanceMatrix& baseline,
                  const std::vector<Comparison>& comparisons, const fs::path& out_dir) {
  EnsureDirectory(out_dir);
  const trust::TrustReport report = trust::Evaluate(baseline);
  probe::WriteMatrix(out_dir / "matrix.json", baseline);
  WriteFileText(out_dir / "matrix.csv", probe::FormatMatrixCsv(baseline));

  nlohmann::json trust_json = report.ToJson();
  nlohmann::json variants = nlohmann::json::array();
  for (const Comparison& cmp : comparisons) {
    const trust::TrustReport after = trust::Evaluate(cmp.matrix, report.threshold);
    variants.push_back({{"label", cmp.label},
                        {"trust_score", after.score},
                        {"band", trust::BandName(after.band)},
                        {"delta", trust::Delta(report, after).ToJson(report.tasks)}});
    HeatmapSpec spec;
    spec.title = cmp.label + " (trust " + Fixed(after.score, 4) + ")";
    WriteFileText(out_dir / ("heatmap_" + cmp.label + ".svg"), RenderHeatmap(cmp.matrix, spec));
  }
  if (!variants.empty()) trust_json["comparisons"] = variants;
  WriteFileText(out_dir / "trust.json", trust_json.dump(2) + "\n");

  HeatmapSpec spec;
  spec.title = "baseline (trust " + Fixed(report.score, 4) + ")";
  WriteFileText(out_dir / "heatmap.svg", RenderHeatmap(baseline, spec));
  WriteFileText(out_dir / "summary.md", FormatSummary(baseline, report, comparisons));
}

}  // namespace overlearn::report
