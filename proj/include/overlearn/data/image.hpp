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

#ifndef OVERLEARN_DATA_IMAGE_HPP_
#define OVERLEARN_DATA_IMAGE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace overlearn::data {

struct Rgb {
  uint8_t r = 0;
  uint8_t g = 0;
  uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

double RgbDistance(Rgb a, Rgb b);

// 8-bit interleaved RGB image, row-major, origin top-left.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }

  Rgb at(int x, int y) const {
    const size_t i = Offset(x, y);
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const size_t i = Offset(x, y);
    pixels_[i] = c.r;
    pixels_[i + 1] = c.g;
    pixels_[i + 2] = c.b;
  }

  std::span<const uint8_t> bytes() const { return pixels_; }
  std::span<uint8_t> bytes() { return pixels_; }

  bool operator==(const Image&) const = default;

 private:
  size_t Offset(int x, int y) const {
    return (static_cast<size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<uint8_t> pixels_;
};

// Lossless 8-bit RGB PNG. Output bytes are a pure function of the image.
std::vector<uint8_t> EncodePng(const Image& image);
Image DecodePng(std::span<const uint8_t> bytes);
void WritePng(const std::filesystem::path& path, const Image& image);
Image ReadPng(const std::filesystem::path& path);

}  // namespace overlearn::data

#endif  // OVERLEARN_DATA_IMAGE_HPP_
