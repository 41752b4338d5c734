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

#include "overlearn/mnist/color_mnist.hpp"

#include <cstdio>
#include <set>

#include "overlearn/common/error.hpp"
#include "overlearn/common/io.hpp"
#include "overlearn/common/rng.hpp"

namespace overlearn::mnist {

namespace fs = std::filesystem;
using data::Rgb;
using data::Split;

const std::vector<NamedColor>& DefaultColorPalette() {
  static const std::vector<NamedColor> palette = {
      {"black", {0, 0, 0}},        {"white", {255, 255, 255}},
      {"red", {230, 0, 0}},        {"green", {0, 180, 0}},
      {"blue", {0, 0, 230}},       {"yellow", {255, 230, 0}},
      {"cyan", {0, 220, 220}},     {"magenta", {220, 0, 220}},
      {"orange", {255, 128, 0}},   {"gray", {128, 128, 128}},
  };
  return palette;
}

namespace {

void ValidatePalette(const std::vector<NamedColor>& palette, const char* which) {
  if (palette.size() < 2) {
    throw Error(ErrorCode::kInvalidConfig, std::string(which) + " palette needs >= 2 colors");
  }
  std::set<std::string> names;
  std::set<std::array<int, 3>> colors;
  for (const NamedColor& c : palette) {
    if (!names.insert(c.name).second || !colors.insert({c.rgb.r, c.rgb.g, c.rgb.b}).second) {
      throw Error(ErrorCode::kInvalidConfig,
                  std::string(which) + " palette repeats " + c.name);
    }
  }
}

nlohmann::json PaletteJson(const std::vector<NamedColor>& palette) {
  nlohmann::json out = nlohmann::json::array();
  for (const NamedColor& c : palette) out.push_back({c.name, {c.rgb.r, c.rgb.g, c.rgb.b}});
  return out;
}

std::vector<std::string> Names(const std::vector<NamedColor>& palette) {
  std::vector<std::string> out;
  for (const NamedColor& c : palette) out.push_back(c.name);
  return out;
}

}  // namespace

void ColorMnistConfig::Validate() const {
  ValidatePalette(fg_palette, "foreground");
  ValidatePalette(bg_palette, "background");
  if (threshold < 1 || threshold > 255) {
    throw Error(ErrorCode::kInvalidConfig, "threshold must lie in [1, 255]");
  }
  // Every foreground color needs at least one distinct background color.
  for (const NamedColor& fg : fg_palette) {
    bool ok = false;
    for (const NamedColor& bg : bg_palette) ok = ok || !(bg.rgb == fg.rgb);
    if (!ok) throw Error(ErrorCode::kInvalidConfig, "no usable background for " + fg.name);
  }
}

nlohmann::json ColorMnistConfig::ToJson() const {
  return {{"kind", "color-mnist"},
          {"seed", seed},
          {"threshold", threshold},
          {"fg_palette", PaletteJson(fg_palette)},
          {"bg_palette", PaletteJson(bg_palette)}};
}

std::vector<data::TaskSpec> ColorMnistTasks(const ColorMnistConfig& config) {
  return {{"digit", {"0", "1", "2", "3", "4", "5", "6", "7", "8", "9"}},
          {"fgcolor", Names(config.fg_palette)},
          {"bgcolor", Names(config.bg_palette)}};
}

ColorAssignment AssignColors(const ColorMnistConfig& config, Split split, uint64_t index) {
  Rng rng = Rng::Stream(config.seed, "color-mnist", static_cast<int>(split), index);
  while (true) {
    ColorAssignment a;
    a.fg = static_cast<int>(rng.Below(config.fg_palette.size()));
    a.bg = static_cast<int>(rng.Below(config.bg_palette.size()));
    if (!(config.fg_palette[a.fg].rgb == config.bg_palette[a.bg].rgb)) return a;
  }
}

data::Image ColorizeDigit(std::span<const uint8_t> gray, int rows, int cols, Rgb fg, Rgb bg,
                          int threshold) {
  if (gray.size() != static_cast<size_t>(rows) * cols) {
    throw Error(ErrorCode::kShapeMismatch, "digit pixel count does not match its shape");
  }
  data::Image image(cols, rows, bg);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      if (gray[static_cast<size_t>(y) * cols + x] >= threshold) image.set(x, y, fg);
    }
  }
  return image;
}

void CheckSplit(const MnistSplit& split) {
  if (split.images.magic != kImageMagic || split.labels.magic != kLabelMagic) {
    throw Error(ErrorCode::kBadMagic, "expected an image file and a label file");
  }
  if (split.images.count() != split.labels.count()) {
    throw Error(ErrorCode::kShapeMismatch, "image and label counts differ");
  }
  for (uint8_t label : split.labels.payload) {
    if (label > 9) throw Error(ErrorCode::kParse, "label outside 0..9");
  }
}

MnistSplit LoadSplit(const fs::path& raw_dir, Split split) {
  const std::string prefix = split == Split::kTrain ? "train" : "t10k";
  auto find = [&](const std::string& stem) {
    for (const char* suffix : {"", ".gz"}) {
      const fs::path p = raw_dir / (stem + suffix);
      if (fs::exists(p)) return p;
    }
    throw Error(ErrorCode::kIo, "missing " + (raw_dir / stem).string() + "[.gz]");
  };
  MnistSplit out{ReadIdx(find(prefix + "-images-idx3-ubyte")),
                 ReadIdx(find(prefix + "-labels-idx1-ubyte"))};
  CheckSplit(out);
  return out;
}

data::Manifest Colorize(const MnistSplit& train, const MnistSplit& test,
                        const ColorMnistConfig& config, const fs::path& out_dir) {
  config.Validate();
  CheckSplit(train);
  CheckSplit(test);
  data::Manifest manifest;
  manifest.generator = config.ToJson();
  manifest.tasks = ColorMnistTasks(config);

  for (Split split : {Split::kTrain, Split::kTest}) {
    const MnistSplit& source = split == Split::kTrain ? train : test;
    const std::string dir(data::SplitName(split));
    EnsureDirectory(out_dir / dir);
    const int rows = static_cast<int>(source.images.dims[1]);
    const int cols = static_cast<int>(source.images.dims[2]);
    for (size_t i = 0; i < source.images.count(); ++i) {
      const ColorAssignment a = AssignColors(config, split, i);
      const data::Image image =
          ColorizeDigit(source.images.item(i), rows, cols, config.fg_palette[a.fg].rgb,
                        config.bg_palette[a.bg].rgb, config.threshold);
      char name[64];
      std::snprintf(name, sizeof(name), "%s/%05zu.png", dir.c_str(), i);
      data::WritePng(out_dir / name, image);
      manifest.rows.push_back(
          {name, split, {static_cast<int>(source.labels.payload[i]), a.fg, a.bg},
           static_cast<int>(i)});
    }
  }
  data::WriteManifest(out_dir / data::kManifestFileName, manifest);
  return manifest;
}

}  // namespace overlearn::mnist
