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

#ifndef OVERLEARN_MNIST_COLOR_MNIST_HPP_
#define OVERLEARN_MNIST_COLOR_MNIST_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "overlearn/data/image.hpp"
#include "overlearn/data/manifest.hpp"
#include "overlearn/mnist/idx.hpp"

namespace overlearn::mnist {

struct NamedColor {
  std::string name;
  data::Rgb rgb;
};

// Ten high-contrast colors shared by the foreground and background draws.
const std::vector<NamedColor>& DefaultColorPalette();

struct ColorMnistConfig {
  std::vector<NamedColor> fg_palette = DefaultColorPalette();
  std::vector<NamedColor> bg_palette = DefaultColorPalette();
  uint64_t seed = 0;
  int threshold = 128;  // source intensity >= threshold is foreground

  void Validate() const;
  nlohmann::json ToJson() const;
};

// Tasks digit:10, fgcolor:|fg_palette|, bgcolor:|bg_palette|.
std::vector<data::TaskSpec> ColorMnistTasks(const ColorMnistConfig& config);

struct ColorAssignment {
  int fg = 0;
  int bg = 0;
};

// Independent uniform draws of fg and bg, redrawn until their RGB values
// differ. Depends only on (seed, split, index).
ColorAssignment AssignColors(const ColorMnistConfig& config, data::Split split,
                             uint64_t index);

data::Image ColorizeDigit(std::span<const uint8_t> gray, int rows, int cols,
                          data::Rgb fg, data::Rgb bg, int threshold);

struct MnistSplit {
  IdxFile images;
  IdxFile labels;
};

// Validates that images and labels pair up and labels are digits.
void CheckSplit(const MnistSplit& split);

// Looks for `<prefix>-images-idx3-ubyte[.gz]` and the matching labels, with
// prefix "train" or "t10k".
MnistSplit LoadSplit(const std::filesystem::path& raw_dir, data::Split split);

// Writes train/ and test/ PNGs plus manifest.csv under `out_dir`.
data::Manifest Colorize(const MnistSplit& train, const MnistSplit& test,
                        const ColorMnistConfig& config,
                        const std::filesystem::path& out_dir);

}  // namespace overlearn::mnist

#endif  // OVERLEARN_MNIST_COLOR_MNIST_HPP_
