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

#include "overlearn/data/task.hpp"

#include <set>

#include "overlearn/common/error.hpp"

namespace overlearn::data {

int TaskSpec::ClassIndex(std::string_view class_name) const {
  for (size_t i = 0; i < class_names.size(); ++i) {
    if (class_names[i] == class_name) return static_cast<int>(i);
  }
  throw Error(ErrorCode::kParse, "task '" + name + "' has no class '" +
                                     std::string(class_name) + "'");
}

void ValidateTask(const TaskSpec& task) {
  if (task.name.empty()) throw Error(ErrorCode::kInvalidConfig, "unnamed task");
  if (task.class_names.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "task '" + task.name + "' has no classes");
  }
  std::set<std::string> seen(task.class_names.begin(), task.class_names.end());
  if (seen.size() != task.class_names.size()) {
    throw Error(ErrorCode::kInvalidConfig,
                "task '" + task.name + "' has duplicate class names");
  }
}

const std::vector<TaskSpec>& PreserveTaskRegistry() {
  static const std::vector<TaskSpec> registry = {
      {"shape", {"circle", "triangle", "diamond", "pentagon", "hexagon"}},
      {"color", {"violet", "indigo", "blue", "green", "yellow", "orange", "red"}},
      {"size", {"small", "medium", "large"}},
      {"location", {"quadrant1", "quadrant2", "quadrant3", "quadrant4"}},
      {"background", {"white", "black", "colored"}},
  };
  return registry;
}

bool VariationLabel::IsValid() const {
  const auto values = AsArray();
  for (size_t t = 0; t < values.size(); ++t) {
    if (values[t] < 0 || values[t] >= kPreserveTaskClassCounts[t]) return false;
  }
  return true;
}

int VariationIndex(const VariationLabel& label) {
  if (!label.IsValid()) throw Error(ErrorCode::kInvalidConfig, "label out of range");
  int index = 0;
  for (size_t t = 0; t < 5; ++t) {
    index = index * kPreserveTaskClassCounts[t] + label.AsArray()[t];
  }
  return index;
}

VariationLabel VariationFromIndex(int index) {
  if (index < 0 || index >= kNumVariations) {
    throw Error(ErrorCode::kInvalidConfig, "variation index out of range");
  }
  std::array<int, 5> v{};
  for (int t = 4; t >= 0; --t) {
    v[t] = index % kPreserveTaskClassCounts[t];
    index /= kPreserveTaskClassCounts[t];
  }
  return {v[0], v[1], v[2], v[3], v[4]};
}

}  // namespace overlearn::data
