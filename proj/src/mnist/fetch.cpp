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

#include "overlearn/mnist/fetch.hpp"

#include <curl/curl.h>
#include <openssl/evp.h>

#include <cstdio>
#include <memory>

#include "overlearn/common/error.hpp"
#include "overlearn/common/io.hpp"

namespace overlearn::mnist {

namespace fs = std::filesystem;

const std::vector<RemoteFile>& StandardMnistFiles() {
  static const std::vector<RemoteFile> files = {
      {"train-images-idx3-ubyte.gz", "f68b3c2dcbeaaa9fbdd348bbdeb94873"},
      {"train-labels-idx1-ubyte.gz", "d53e105ee54ea40749a09fcbcd1e9432"},
      {"t10k-images-idx3-ubyte.gz", "9fb629c4189551a2d022fa330f9573f3"},
      {"t10k-labels-idx1-ubyte.gz", "ec29112dd5afa0611ce80d1b7f02629c"},
  };
  return files;
}

std::string Md5Hex(std::span<const uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_md5(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "MD5 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

namespace {

size_t Collect(char* data, size_t size, size_t count, void* user) {
  auto* out = static_cast<std::vector<uint8_t>*>(user);
  out->insert(out->end(), data, data + size * count);
  return size * count;
}

std::vector<uint8_t> Download(const std::string& url) {
  static const bool initialised = curl_global_init(CURL_GLOBAL_DEFAULT) == CURLE_OK;
  if (!initialised) throw Error(ErrorCode::kIo, "libcurl initialisation failed");
  std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> curl(curl_easy_init(),
                                                           &curl_easy_cleanup);
  if (!curl) throw Error(ErrorCode::kIo, "libcurl handle creation failed");
  std::vector<uint8_t> body;
  curl_easy_setopt(curl.get(), CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl.get(), CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl.get(), CURLOPT_FAILONERROR, 1L);
  curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, &Collect);
  curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, &body);
  const CURLcode rc = curl_easy_perform(curl.get());
  if (rc != CURLE_OK) {
    throw Error(ErrorCode::kIo, "download of " + url + " failed: " + curl_easy_strerror(rc));
  }
  return body;
}

}  // namespace

void FetchFiles(const std::string& base_url, const std::vector<RemoteFile>& files,
                const fs::path& raw_dir) {
  EnsureDirectory(raw_dir);
  std::string base = base_url;
  if (!base.empty() && base.back() != '/') base.push_back('/');
  for (const RemoteFile& file : files) {
    const fs::path target = raw_dir / file.name;
    if (fs::exists(target) && Md5Hex(ReadFileBytes(target)) == file.md5) continue;
    const std::vector<uint8_t> body = Download(base + file.name);
    const std::string got = Md5Hex(body);
    if (got != file.md5) {
      throw Error(ErrorCode::kChecksumMismatch,
                  file.name + ": expected md5 " + file.md5 + ", got " + got);
    }
    const fs::path partial = target.string() + ".part";
    WriteFileBytes(partial, body);
    fs::rename(partial, target);
  }
}

}  // namespace overlearn::mnist
