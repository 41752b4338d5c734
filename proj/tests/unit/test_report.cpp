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

#include <filesystem>
#include <regex>
#include <string>
#include <vector>

#include "doctest.h"
#include "overlearn/common/error.hpp"
#include "overlearn/common/io.hpp"
#include "overlearn/data/task.hpp"
#include "overlearn/report/report.hpp"
#include "overlearn/trust/trust.hpp"
#include "temp_dir.hpp"

using namespace overlearn;
using namespace overlearn::report;
namespace fs = std::filesystem;

namespace {

size_t Count(const std::string& text, const std::string& needle) {
  size_t n = 0;
  for (size_t p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

probe::PerformanceMatrix Matrix(double off) {
  probe::PerformanceMatrix m;
  m.tasks = data::PreserveTaskRegistry();
  for (size_t i = 0; i < 5; ++i) {
    m.cells.emplace_back();
    for (size_t j = 0; j < 5; ++j) {
      m.cells[i].push_back(i == j ? 0.97 : off + 0.01234567891 * static_cast<double>(i * 5 + j));
    }
  }
  return m;
}

// Extracts fill colors of the cell rectangles in document order.
std::vector<std::string> CellFills(const std::string& svg) {
  std::vector<std::string> fills;
  const std::regex re("<rect class=\"cell\"[^>]*fill=\"(#[0-9a-f]{6})\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator();
       ++it) {
    fills.push_back((*it)[1]);
  }
  return fills;
}

}  // namespace

TEST_CASE("heatmap structure") {
  const probe::PerformanceMatrix m = Matrix(0.4);
  HeatmapSpec spec;
  spec.title = "a < b & c";
  const std::string svg = RenderHeatmap(m, spec);
  CHECK(svg.rfind("<svg xmlns=\"http://www.w3.org/2000/svg\"", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(Count(svg, "<rect class=\"cell\"") == 25);
  CHECK(Count(svg, "<text class=\"value\"") == 25);
  CHECK(Count(svg, "<text class=\"row-label\"") == 5);
  CHECK(Count(svg, "<text class=\"col-label\"") == 5);
  CHECK(svg.find("a &lt; b &amp; c") != std::string::npos);
  for (const auto& t : m.tasks) CHECK(svg.find(">" + t.name + "<") != std::string::npos);
  CHECK(svg.find(">0.97<") != std::string::npos);
  CHECK(RenderHeatmap(m, spec) == svg);
  CHECK(CellFills(svg).size() == 25);
}

TEST_CASE("heatmap label mismatch") {
  trust::Matrix cells = {{0.1, 0.2}, {0.3, 0.4}};
  CHECK_THROWS_AS(RenderHeatmap(cells, {"a"}, {"a", "b"}, HeatmapSpec{}), Error);
  CHECK_THROWS_AS(RenderHeatmap(cells, {"a", "b"}, {"a"}, HeatmapSpec{}), Error);
}

TEST_CASE("color ramp") {
  const HeatmapSpec spec;
  CHECK(RampColor(0.0, spec) == spec.low);
  CHECK(RampColor(1.0, spec) == spec.high);
  CHECK(RampColor(-3.0, spec) == spec.low);
  CHECK(RampColor(7.0, spec) == spec.high);
  // Each channel moves monotonically from low to high.
  data::Rgb prev = spec.low;
  for (int k = 1; k <= 100; ++k) {
    const data::Rgb c = RampColor(k / 100.0, spec);
    CHECK((spec.high.r >= spec.low.r ? c.r >= prev.r : c.r <= prev.r));
    CHECK((spec.high.g >= spec.low.g ? c.g >= prev.g : c.g <= prev.g));
    CHECK((spec.high.b >= spec.low.b ? c.b >= prev.b : c.b <= prev.b));
    prev = c;
  }
}

TEST_CASE("ideal matrix renders its diagonal at the top of the ramp") {
  const auto& tasks = data::PreserveTaskRegistry();
  const trust::Matrix ideal = trust::IdealMatrix(tasks);
  std::vector<std::string> names;
  for (const auto& t : tasks) names.push_back(t.name);
  const HeatmapSpec spec;
  const auto fills = CellFills(RenderHeatmap(ideal, names, names, spec));
  char high[8];
  std::snprintf(high, sizeof(high), "#%02x%02x%02x", spec.high.r, spec.high.g, spec.high.b);
  for (size_t i = 0; i < 5; ++i) {
    for (size_t j = 0; j < 5; ++j) CHECK((fills[i * 5 + j] == high) == (i == j));
  }
}

TEST_CASE("report export") {
  const probe::PerformanceMatrix base = Matrix(0.5);
  TempDir dir("report");
  ExportReport(base, {}, dir.path());
  for (const char* f : {"matrix.csv", "matrix.json", "trust.json", "heatmap.svg", "summary.md"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  const std::string summary = ReadFileText(dir / "summary.md");
  CHECK(summary.find("Before/after") == std::string::npos);
  CHECK(!nlohmann::json::parse(ReadFileText(dir / "trust.json")).contains("comparisons"));

  const probe::PerformanceMatrix csv = probe::ParseMatrixCsv(ReadFileText(dir / "matrix.csv"));
  for (size_t i = 0; i < 5; ++i) {
    for (size_t j = 0; j < 5; ++j) CHECK(std::abs(csv.cells[i][j] - base.cells[i][j]) <= 1e-9);
  }
  CHECK(probe::ReadMatrix(dir / "matrix.json") == base);
  const double score = trust::Evaluate(base).score;
  CHECK(nlohmann::json::parse(ReadFileText(dir / "trust.json")).at("trust_score").get<double>() ==
        score);

  // With a comparison the delta table and per-variant heatmap appear.
  TempDir dir2("report-cmp");
  const probe::PerformanceMatrix after = Matrix(0.3);
  ExportReport(base, {{"suppressed", after}}, dir2.path());
  const std::string summary2 = ReadFileText(dir2 / "summary.md");
  CHECK(summary2.find("Before/after") != std::string::npos);
  CHECK(summary2.find("| suppressed |") != std::string::npos);
  CHECK(fs::exists(dir2 / "heatmap_suppressed.svg"));
  const auto trust_json = nlohmann::json::parse(ReadFileText(dir2 / "trust.json"));
  const auto& cmp = trust_json.at("comparisons").at(0);
  CHECK(cmp.at("label") == "suppressed");
  const double after_score = trust::Evaluate(after).score;
  CHECK(cmp.at("trust_score").get<double>() == after_score);
  CHECK(after_score > score);

  // Byte-identical on repetition.
  TempDir dir3("report-cmp2");
  ExportReport(base, {{"suppressed", after}}, dir3.path());
  for (const char* f : {"matrix.csv", "matrix.json", "trust.json", "heatmap.svg", "summary.md",
                        "heatmap_suppressed.svg"}) {
    CHECK_MESSAGE(ReadFileBytes(dir2 / f) == ReadFileBytes(dir3 / f), f);
  }
}
