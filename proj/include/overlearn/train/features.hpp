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

#ifndef OVERLEARN_TRAIN_FEATURES_HPP_
#define OVERLEARN_TRAIN_FEATURES_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "overlearn/data/manifest.hpp"
#include "overlearn/train/checkpoint.hpp"
#include "overlearn/train/dataset.hpp"

namespace overlearn::train {

// Frozen f(x) rows for one split with every task's labels attached.
struct FeatureTable {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<float> values;  // row-major [rows, cols]
  std::vector<data::TaskSpec> tasks;
  std::vector<std::vector<int>> labels;  // labels[task][row]
  data::Split split = data::Split::kTrain;
  nlohmann::json provenance = nlohmann::json::object();

  const float* row(int64_t r) const { return values.data() + r * cols; }
  size_t TaskIndex(const std::string& name) const;
  bool operator==(const FeatureTable&) const = default;
};

// Eval-mode forward of the trunk over `images` (raw, un-normalized).
FeatureTable ExtractFeatures(const Checkpoint& checkpoint, const ImageSet& images,
                             const std::vector<data::TaskSpec>& tasks, data::Split split);
FeatureTable ExtractFeatures(const Checkpoint& checkpoint, const data::Manifest& manifest,
                             const std::filesystem::path& dataset_dir, data::Split split);

// `<stem>.f32` holds little-endian float32 rows; `<stem>.json` describes
// shape, tasks, labels and provenance.
void WriteFeatures(const std::filesystem::path& stem, const FeatureTable& table);
FeatureTable ReadFeatures(const std::filesystem::path& stem);

}  // namespace overlearn::train

#endif  // OVERLEARN_TRAIN_FEATURES_HPP_
