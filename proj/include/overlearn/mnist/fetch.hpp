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

#ifndef OVERLEARN_MNIST_FETCH_HPP_
#define OVERLEARN_MNIST_FETCH_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace overlearn::mnist {

struct RemoteFile {
  std::string name;
  std::string md5;  // lowercase hex
};

// The four canonical gzip files and their published MD5 digests.
const std::vector<RemoteFile>& StandardMnistFiles();

std::string Md5Hex(std::span<const uint8_t> bytes);

// Downloads `base_url/<name>` for every file into `raw_dir` (any scheme
// libcurl accepts, including file://). A file already present with the right
// digest is kept. Throws checksum-mismatch and leaves no partial file behind
// when a download does not match.
void FetchFiles(const std::string& base_url, const std::vector<RemoteFile>& files,
                const std::filesystem::path& raw_dir);

}  // namespace overlearn::mnist

#endif  // OVERLEARN_MNIST_FETCH_HPP_
