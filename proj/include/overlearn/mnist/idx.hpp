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

#ifndef OVERLEARN_MNIST_IDX_HPP_
#define OVERLEARN_MNIST_IDX_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace overlearn::mnist {

inline constexpr uint32_t kLabelMagic = 2049;
inline constexpr uint32_t kImageMagic = 2051;

// Big-endian IDX container restricted to the two unsigned-byte layouts MNIST
// uses: labels [N] and images [N, rows, cols].
struct IdxFile {
  uint32_t magic = 0;
  std::vector<uint32_t> dims;
  std::vector<uint8_t> payload;

  size_t count() const { return dims.empty() ? 0 : dims[0]; }
  size_t item_size() const;
  std::span<const uint8_t> item(size_t i) const {
    return std::span<const uint8_t>(payload).subspan(i * item_size(), item_size());
  }
};

// Throws bad-magic for unknown magic numbers and truncated-payload when the
// data is shorter than the header promises. Trailing bytes are rejected too.
IdxFile ParseIdx(std::span<const uint8_t> bytes);
std::vector<uint8_t> FormatIdx(const IdxFile& file);

// Reads a raw or gzip-compressed IDX file (detected by content).
IdxFile ReadIdx(const std::filesystem::path& path);

std::vector<uint8_t> Gunzip(std::span<const uint8_t> bytes);

}  // namespace overlearn::mnist

#endif  // OVERLEARN_MNIST_IDX_HPP_
