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

#ifndef OVERLEARN_DATA_MANIFEST_HPP_
#define OVERLEARN_DATA_MANIFEST_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "overlearn/data/task.hpp"

namespace overlearn::data {

enum class Split { kTrain, kTest };

std::string_view SplitName(Split split);
Split ParseSplit(std::string_view name);

struct ManifestRow {
  std::string path;  // relative to the dataset directory
  Split split = Split::kTrain;
  std::vector<int> labels;  // one class index per task, in task order
  int instance = 0;

  bool operator==(const ManifestRow&) const = default;
};

// On-disk index of a labeled image dataset.
//
// File layout (manifest.csv):
//   # {"format":"overlearn-manifest","version":1,"generator":{...},"tasks":[...]}
//   path,split,<task_1>,...,<task_n>,instance
//   train/v0000_i000.png,train,circle,violet,...,0
//
// Labels are written as class names; the header line carries the task
// registry and an echo of the generator configuration.
struct Manifest {
  static constexpr int kFormatVersion = 1;

  nlohmann::json generator = nlohmann::json::object();
  std::vector<TaskSpec> tasks;
  std::vector<ManifestRow> rows;

  size_t TaskIndex(std::string_view name) const;
  size_t Count(Split split) const;
  std::vector<const ManifestRow*> Rows(Split split) const;

  // Per-class row counts of `task` within `split`.
  std::vector<size_t> ClassHistogram(size_t task, Split split) const;

  bool operator==(const Manifest&) const = default;
};

std::string FormatManifest(const Manifest& manifest);
Manifest ParseManifest(std::string_view text);

void WriteManifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest ReadManifest(const std::filesystem::path& path);

inline constexpr const char* kManifestFileName = "manifest.csv";

}  // namespace overlearn::data

#endif  // OVERLEARN_DATA_MANIFEST_HPP_
