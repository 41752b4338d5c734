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

#ifndef OVERLEARN_TRAIN_DATASET_HPP_
#define OVERLEARN_TRAIN_DATASET_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "overlearn/ad/tensor.hpp"
#include "overlearn/data/manifest.hpp"

namespace overlearn::train {

// Every image of one split, decoded into memory.
struct ImageSet {
  ad::Tensor images;                    // [N, 3, side, side], values in [0, 1]
  std::vector<std::vector<int>> labels; // labels[task][row]
  std::vector<std::string> paths;

  int64_t size() const { return images.rank() ? images.dim(0) : 0; }
};

ImageSet LoadImageSet(const data::Manifest& manifest,
                      const std::filesystem::path& dataset_dir, data::Split split);

// Per-channel z-normalization.
struct Normalization {
  std::vector<float> mean;
  std::vector<float> stddev;

  nlohmann::json ToJson() const;
  static Normalization FromJson(const nlohmann::json& json);
  bool operator==(const Normalization&) const = default;
};

Normalization ComputeNormalization(const ad::Tensor& images);
void ApplyNormalization(const Normalization& norm, ad::Tensor& images);

// Copies rows `indices` of a [N, ...] tensor into `out`.
void GatherRows(const ad::Tensor& source, const std::vector<int64_t>& indices,
                ad::Tensor& out);

}  // namespace overlearn::train

#endif  // OVERLEARN_TRAIN_DATASET_HPP_
