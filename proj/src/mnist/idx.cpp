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

#include "overlearn/mnist/idx.hpp"

#include <zlib.h>

#include <string>

#include "overlearn/common/error.hpp"
#include "overlearn/common/io.hpp"

namespace overlearn::mnist {

namespace {

uint32_t ReadBe32(std::span<const uint8_t> bytes, size_t offset) {
  return (uint32_t{bytes[offset]} << 24) | (uint32_t{bytes[offset + 1]} << 16) |
         (uint32_t{bytes[offset + 2]} << 8) | uint32_t{bytes[offset + 3]};
}

void AppendBe32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

size_t RankOf(uint32_t magic) {
  switch (magic) {
    case kLabelMagic: return 1;
    case kImageMagic: return 3;
    default:
      throw Error(ErrorCode::kBadMagic, "unknown IDX magic " + std::to_string(magic));
  }
}

}  // namespace

size_t IdxFile::item_size() const {
  size_t n = 1;
  for (size_t k = 1; k < dims.size(); ++k) n *= dims[k];
  return n;
}

IdxFile ParseIdx(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::kTruncatedPayload, "IDX header cut short");
  IdxFile file;
  file.magic = ReadBe32(bytes, 0);
  const size_t rank = RankOf(file.magic);
  const size_t header = 4 + 4 * rank;
  if (bytes.size() < header) {
    throw Error(ErrorCode::kTruncatedPayload, "IDX dimension table cut short");
  }
  uint64_t total = 1;
  for (size_t k = 0; k < rank; ++k) {
    file.dims.push_back(ReadBe32(bytes, 4 + 4 * k));
    total *= file.dims.back();
  }
  const uint64_t available = bytes.size() - header;
  if (available < total) {
    throw Error(ErrorCode::kTruncatedPayload,
                "IDX payload has " + std::to_string(available) + " of " +
                    std::to_string(total) + " bytes");
  }
  if (available > total) {
    throw Error(ErrorCode::kTruncatedPayload, "IDX payload has trailing bytes");
  }
  file.payload.assign(bytes.begin() + static_cast<ptrdiff_t>(header), bytes.end());
  return file;
}

std::vector<uint8_t> FormatIdx(const IdxFile& file) {
  if (file.dims.size() != RankOf(file.magic)) {
    throw Error(ErrorCode::kShapeMismatch, "IDX rank does not match magic");
  }
  std::vector<uint8_t> out;
  AppendBe32(out, file.magic);
  for (uint32_t d : file.dims) AppendBe32(out, d);
  out.insert(out.end(), file.payload.begin(), file.payload.end());
  return out;
}

std::vector<uint8_t> Gunzip(std::span<const uint8_t> bytes) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK) {
    throw Error(ErrorCode::kIo, "zlib initialisation failed");
  }
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  std::vector<uint8_t> out;
  uint8_t chunk[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk;
    zs.avail_out = sizeof(chunk);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(ErrorCode::kTruncatedPayload, "corrupt or truncated gzip stream");
    }
    out.insert(out.end(), chunk, chunk + (sizeof(chunk) - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw Error(ErrorCode::kTruncatedPayload, "gzip stream ends early");
    }
  }
  inflateEnd(&zs);
  return out;
}

IdxFile ReadIdx(const std::filesystem::path& path) {
  std::vector<uint8_t> bytes = ReadFileBytes(path);
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) bytes = Gunzip(bytes);
  return ParseIdx(bytes);
}

}  // namespace overlearn::mnist
