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

#ifndef OVERLEARN_COMMON_IO_HPP_
#define OVERLEARN_COMMON_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace overlearn {

std::vector<uint8_t> ReadFileBytes(const std::filesystem::path& path);
std::string ReadFileText(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path,
                    std::span<const uint8_t> bytes);
void WriteFileText(const std::filesystem::path& path, std::string_view text);

// Creates `dir` (and parents); throws io-error if that fails.
void EnsureDirectory(const std::filesystem::path& dir);

// 64-bit FNV-1a content fingerprint rendered as 16 hex digits. Used for
// provenance ids, not for integrity against adversaries.
std::string Fingerprint(std::span<const uint8_t> bytes);
std::string FileFingerprint(const std::filesystem::path& path);

}  // namespace overlearn

#endif  // OVERLEARN_COMMON_IO_HPP_
