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

#include "overlearn/data/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdlib>
#include <memory>

#include "overlearn/common/error.hpp"
#include "overlearn/common/io.hpp"

namespace overlearn::data {

double RgbDistance(Rgb a, Rgb b) {
  const double dr = double(a.r) - b.r;
  const double dg = double(a.g) - b.g;
  const double db = double(a.b) - b.b;
  return std::sqrt(dr * dr + dg * dg + db * db);
}

Image::Image(int width, int height, Rgb fill)
    : width_(width), height_(height),
      pixels_(static_cast<size_t>(width) * height * 3) {
  for (size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

namespace {

png_image MakeHeader(int width, int height) {
  png_image header{};
  header.version = PNG_IMAGE_VERSION;
  header.width = static_cast<png_uint_32>(width);
  header.height = static_cast<png_uint_32>(height);
  header.format = PNG_FORMAT_RGB;
  return header;
}

}  // namespace

std::vector<uint8_t> EncodePng(const Image& image) {
  png_image header = MakeHeader(image.width(), image.height());
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&header, nullptr, &size, 0,
                                 image.bytes().data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, std::string("png size query: ") + header.message);
  }
  std::vector<uint8_t> out(size);
  if (!png_image_write_to_memory(&header, out.data(), &size, 0,
                                 image.bytes().data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, std::string("png encode: ") + header.message);
  }
  out.resize(size);
  return out;
}

Image DecodePng(std::span<const uint8_t> bytes) {
  png_image header{};
  header.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&header, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::kIo, std::string("png header: ") + header.message);
  }
  header.format = PNG_FORMAT_RGB;
  Image image(static_cast<int>(header.width), static_cast<int>(header.height));
  if (!png_image_finish_read(&header, nullptr, image.bytes().data(), 0, nullptr)) {
    png_image_free(&header);
    throw Error(ErrorCode::kIo, std::string("png decode: ") + header.message);
  }
  return image;
}

void WritePng(const std::filesystem::path& path, const Image& image) {
  WriteFileBytes(path, EncodePng(image));
}

Image ReadPng(const std::filesystem::path& path) {
  return DecodePng(ReadFileBytes(path));
}

}  // namespace overlearn::data
