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

#ifndef OVERLEARN_DATA_GENERATOR_HPP_
#define OVERLEARN_DATA_GENERATOR_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "overlearn/common/rng.hpp"
#include "overlearn/data/image.hpp"
#include "overlearn/data/manifest.hpp"
#include "overlearn/data/task.hpp"

namespace overlearn::data {

struct NamedColor {
  const char* name;
  Rgb rgb;
};

// Foreground palette in color-task class order (violet ... red).
const std::array<NamedColor, 7>& ForegroundPalette();
inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{0, 0, 0};

// Nominal circumscribed-circle diameter of each size class as a fraction of
// the image side; each sample adds uniform jitter of +/- kSizeJitter.
inline constexpr std::array<double, 3> kSizeFractions = {0.24, 0.33, 0.42};
inline constexpr double kSizeJitter = 0.02;

struct GenConfig {
  int image_side = 256;
  int train_per_variation = 50;
  int test_per_variation = 10;
  uint64_t seed = 0;
  // Maximum centre offset from the quadrant-cell centre, as a fraction of
  // the cell side. Further limited so the shape stays inside the image.
  double jitter = 0.15;

  void Validate() const;
  nlohmann::json ToJson() const;
  static GenConfig FromJson(const nlohmann::json& j);

  bool operator==(const GenConfig&) const = default;
};

// Where and how a shape is drawn; sampled by SampleGeometry.
struct ShapeGeometry {
  double center_x = 0;
  double center_y = 0;
  double radius = 0;  // circumscribed radius, pixels
  Rgb foreground;
  Rgb background;
};

ShapeGeometry SampleGeometry(const VariationLabel& label, const GenConfig& config,
                             Rng& rng);
Image RenderGeometry(Shape shape, const ShapeGeometry& geometry, int side);

// Draws one sample. Deterministic given the RNG state.
Image RenderSample(const VariationLabel& label, const GenConfig& config, Rng& rng);

// Stream used for one sample; independent of generation order.
Rng SampleStream(uint64_t seed, int variation, Split split, int instance);

// Renders every (variation, split, instance) under out_dir and writes
// manifest.csv. Train rows come first, each block ordered by variation then
// instance.
Manifest GenerateDataset(const GenConfig& config,
                         const std::filesystem::path& out_dir);

}  // namespace overlearn::data

#endif  // OVERLEARN_DATA_GENERATOR_HPP_
