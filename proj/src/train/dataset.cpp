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

#include "overlearn/train/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "overlearn/common/error.hpp"
#include "overlearn/data/image.hpp"

namespace overlearn::train {

ImageSet LoadImageSet(const data::Manifest& manifest, const std::filesystem::path& dataset_dir,
                      data::Split split) {
  const std::vector<const data::ManifestRow*> rows = manifest.Rows(split);
  ImageSet set;
  set.labels.assign(manifest.tasks.size(), {});
  int64_t side = -1;
  std::vector<float> pixels;
  for (const data::ManifestRow* row : rows) {
    const data::Image image = data::ReadPng(dataset_dir / row->path);
    if (image.width() != image.height()) {
      throw Error(ErrorCode::kShapeMismatch, row->path + " is not square");
    }
    if (side < 0) {
      side = image.width();
      pixels.reserve(rows.size() * 3 * side * side);
    } else if (image.width() != side) {
      throw Error(ErrorCode::kShapeMismatch, row->path + " differs in size");
    }
    const auto bytes = image.bytes();
    for (int c = 0; c < 3; ++c) {
      for (int64_t p = 0; p < side * side; ++p) {
        pixels.push_back(static_cast<float>(bytes[3 * p + c]) / 255.0f);
      }
    }
    for (size_t t = 0; t < manifest.tasks.size(); ++t) set.labels[t].push_back(row->labels[t]);
    set.paths.push_back(row->path);
  }
  if (side < 0) throw Error(ErrorCode::kIo, "split has no images");
  set.images = ad::Tensor({static_cast<int64_t>(rows.size()), 3, side, side},
                          std::move(pixels));
  return set;
}

nlohmann::json Normalization::ToJson() const {
  return {{"mean", mean}, {"stddev", stddev}};
}

Normalization Normalization::FromJson(const nlohmann::json& json) {
  return {json.at("mean").get<std::vector<float>>(),
          json.at("stddev").get<std::vector<float>>()};
}

Normalization ComputeNormalization(const ad::Tensor& images) {
  if (images.rank() != 4) throw Error(ErrorCode::kShapeMismatch, "expected [N,C,H,W]");
  const int64_t n = images.dim(0), c = images.dim(1), hw = images.dim(2) * images.dim(3);
  Normalization norm;
  for (int64_t ch = 0; ch < c; ++ch) {
    double sum = 0.0, sq = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      const float* p = images.data() + (i * c + ch) * hw;
      for (int64_t k = 0; k < hw; ++k) {
        sum += p[k];
        sq += static_cast<double>(p[k]) * p[k];
      }
    }
    const double count = static_cast<double>(n * hw);
    const double mean = sum / count;
    const double var = std::max(0.0, sq / count - mean * mean);
    norm.mean.push_back(static_cast<float>(mean));
    // A constant channel carries no information; leave it centred only.
    norm.stddev.push_back(var > 1e-12 ? static_cast<float>(std::sqrt(var)) : 1.0f);
  }
  return norm;
}

void ApplyNormalization(const Normalization& norm, ad::Tensor& images) {
  const int64_t n = images.dim(0), c = images.dim(1), hw = images.dim(2) * images.dim(3);
  if (static_cast<int64_t>(norm.mean.size()) != c) {
    throw Error(ErrorCode::kConfigMismatch, "normalization channel count differs");
  }
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t ch = 0; ch < c; ++ch) {
      float* p = images.data() + (i * c + ch) * hw;
      const float m = norm.mean[ch], s = norm.stddev[ch];
      for (int64_t k = 0; k < hw; ++k) p[k] = (p[k] - m) / s;
    }
  }
}

void GatherRows(const ad::Tensor& source, const std::vector<int64_t>& indices,
                ad::Tensor& out) {
  ad::Shape shape = source.shape();
  const int64_t stride = shape[0] ? source.size() / shape[0] : 0;
  shape[0] = static_cast<int64_t>(indices.size());
  out.Resize(shape);
  for (size_t r = 0; r < indices.size(); ++r) {
    const float* src = source.data() + indices[r] * stride;
    std::copy(src, src + stride, out.data() + static_cast<int64_t>(r) * stride);
  }
}

}  // namespace overlearn::train
