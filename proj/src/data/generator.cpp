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

#include "overlearn/data/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "overlearn/common/error.hpp"
#include "overlearn/common/io.hpp"

namespace overlearn::data {

const std::array<NamedColor, 7>& ForegroundPalette() {
  static const std::array<NamedColor, 7> palette = {{
      {"violet", {148, 0, 211}},
      {"indigo", {75, 0, 130}},
      {"blue", {0, 0, 255}},
      {"green", {0, 200, 0}},
      {"yellow", {255, 255, 0}},
      {"orange", {255, 140, 0}},
      {"red", {255, 0, 0}},
  }};
  return palette;
}

void GenConfig::Validate() const {
  if (image_side < 32) {
    throw Error(ErrorCode::kInvalidConfig, "image_side must be >= 32");
  }
  if (train_per_variation < 1 || test_per_variation < 1) {
    throw Error(ErrorCode::kInvalidConfig, "per-variation counts must be >= 1");
  }
  if (!(jitter >= 0.0 && jitter <= 0.25)) {
    throw Error(ErrorCode::kInvalidConfig, "jitter must lie in [0, 0.25]");
  }
}

nlohmann::json GenConfig::ToJson() const {
  nlohmann::json palette = nlohmann::json::object();
  for (const auto& c : ForegroundPalette()) {
    palette[c.name] = {c.rgb.r, c.rgb.g, c.rgb.b};
  }
  palette["white"] = {kWhite.r, kWhite.g, kWhite.b};
  palette["black"] = {kBlack.r, kBlack.g, kBlack.b};
  return {{"kind", "preservetask"},
          {"image_side", image_side},
          {"train_per_variation", train_per_variation},
          {"test_per_variation", test_per_variation},
          {"seed", seed},
          {"jitter", jitter},
          {"size_fractions", kSizeFractions},
          {"size_jitter", kSizeJitter},
          {"palette", palette}};
}

GenConfig GenConfig::FromJson(const nlohmann::json& j) {
  GenConfig c;
  c.image_side = j.at("image_side").get<int>();
  c.train_per_variation = j.at("train_per_variation").get<int>();
  c.test_per_variation = j.at("test_per_variation").get<int>();
  c.seed = j.at("seed").get<uint64_t>();
  c.jitter = j.at("jitter").get<double>();
  return c;
}

namespace {

// Centre of the quadrant cell in pixel coordinates (y grows downwards).
void QuadrantCenter(Quadrant q, double side, double& x, double& y) {
  const double lo = 0.25 * side, hi = 0.75 * side;
  switch (q) {
    case Quadrant::kQ1: x = hi; y = lo; break;
    case Quadrant::kQ2: x = lo; y = lo; break;
    case Quadrant::kQ3: x = lo; y = hi; break;
    case Quadrant::kQ4: x = hi; y = hi; break;
  }
}

int VertexCount(Shape shape) {
  switch (shape) {
    case Shape::kTriangle: return 3;
    case Shape::kDiamond: return 4;
    case Shape::kPentagon: return 5;
    case Shape::kHexagon: return 6;
    case Shape::kCircle: return 0;
  }
  return 0;
}

struct Point {
  double x, y;
};

// Regular polygon with one vertex pointing straight up.
std::vector<Point> PolygonVertices(int n, double cx, double cy, double r) {
  std::vector<Point> v;
  for (int k = 0; k < n; ++k) {
    const double theta = -std::numbers::pi / 2 + 2 * std::numbers::pi * k / n;
    v.push_back({cx + r * std::cos(theta), cy + r * std::sin(theta)});
  }
  return v;
}

bool InsideConvex(const std::vector<Point>& v, double px, double py) {
  // Vertices run clockwise on screen (counter-clockwise in y-up terms), so an
  // interior point has a non-negative cross product against every edge.
  for (size_t i = 0; i < v.size(); ++i) {
    const Point& a = v[i];
    const Point& b = v[(i + 1) % v.size()];
    const double cross = (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
    if (cross < 0) return false;
  }
  return true;
}

}  // namespace

ShapeGeometry SampleGeometry(const VariationLabel& label, const GenConfig& config,
                             Rng& rng) {
  if (!label.IsValid()) throw Error(ErrorCode::kInvalidConfig, "invalid label");
  const double side = config.image_side;
  const auto& palette = ForegroundPalette();

  ShapeGeometry g;
  g.foreground = palette[label.color].rgb;

  const double diameter =
      side * (kSizeFractions[label.size] + rng.Uniform(-kSizeJitter, kSizeJitter));
  g.radius = diameter / 2;

  double cx = 0, cy = 0;
  QuadrantCenter(static_cast<Quadrant>(label.location), side, cx, cy);
  const double cell = side / 2;
  const double max_offset =
      std::max(0.0, std::min(config.jitter * cell, 0.25 * side - g.radius - 1.0));
  g.center_x = cx + rng.Uniform(-max_offset, max_offset);
  g.center_y = cy + rng.Uniform(-max_offset, max_offset);

  switch (static_cast<Background>(label.background)) {
    case Background::kWhite: g.background = kWhite; break;
    case Background::kBlack: g.background = kBlack; break;
    case Background::kColored: {
      // Uniform over the six palette colours other than the foreground.
      int pick = static_cast<int>(rng.Below(palette.size() - 1));
      if (pick >= label.color) ++pick;
      g.background = palette[pick].rgb;
      break;
    }
  }
  return g;
}

Image RenderGeometry(Shape shape, const ShapeGeometry& g, int side) {
  Image image(side, side, g.background);
  const int x0 = std::max(0, static_cast<int>(std::floor(g.center_x - g.radius)) - 1);
  const int x1 = std::min(side - 1, static_cast<int>(std::ceil(g.center_x + g.radius)) + 1);
  const int y0 = std::max(0, static_cast<int>(std::floor(g.center_y - g.radius)) - 1);
  const int y1 = std::min(side - 1, static_cast<int>(std::ceil(g.center_y + g.radius)) + 1);

  const int n = VertexCount(shape);
  const auto vertices = PolygonVertices(n, g.center_x, g.center_y, g.radius);
  const double r2 = g.radius * g.radius;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      // Pixels are sampled at their centres; no anti-aliasing.
      const double px = x + 0.5, py = y + 0.5;
      bool inside;
      if (n == 0) {
        const double dx = px - g.center_x, dy = py - g.center_y;
        inside = dx * dx + dy * dy <= r2;
      } else {
        inside = InsideConvex(vertices, px, py);
      }
      if (inside) image.set(x, y, g.foreground);
    }
  }
  return image;
}

Image RenderSample(const VariationLabel& label, const GenConfig& config, Rng& rng) {
  const ShapeGeometry g = SampleGeometry(label, config, rng);
  return RenderGeometry(static_cast<Shape>(label.shape), g, config.image_side);
}

Rng SampleStream(uint64_t seed, int variation, Split split, int instance) {
  return Rng::Stream(seed, "render", variation, static_cast<int>(split), instance);
}

Manifest GenerateDataset(const GenConfig& config, const std::filesystem::path& out_dir) {
  config.Validate();
  EnsureDirectory(out_dir / "train");
  EnsureDirectory(out_dir / "test");

  Manifest manifest;
  manifest.generator = config.ToJson();
  manifest.tasks = PreserveTaskRegistry();

  for (Split split : {Split::kTrain, Split::kTest}) {
    const int per_variation = split == Split::kTrain ? config.train_per_variation
                                                     : config.test_per_variation;
    for (int v = 0; v < kNumVariations; ++v) {
      const VariationLabel label = VariationFromIndex(v);
      for (int i = 0; i < per_variation; ++i) {
        Rng rng = SampleStream(config.seed, v, split, i);
        const Image image = RenderSample(label, config, rng);
        char name[64];
        std::snprintf(name, sizeof(name), "%s/v%04d_i%03d.png",
                      std::string(SplitName(split)).c_str(), v, i);
        WritePng(out_dir / name, image);
        const auto labels = label.AsArray();
        manifest.rows.push_back(
            {name, split, std::vector<int>(labels.begin(), labels.end()), i});
      }
    }
  }
  WriteManifest(out_dir / kManifestFileName, manifest);
  return manifest;
}

}  // namespace overlearn::data
