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

#ifndef OVERLEARN_DATA_TASK_HPP_
#define OVERLEARN_DATA_TASK_HPP_

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace overlearn::data {

// One classification task that can be read off every image.
struct TaskSpec {
  std::string name;
  std::vector<std::string> class_names;

  size_t num_classes() const { return class_names.size(); }
  // Index of `class_name`, throws parse-error if absent.
  int ClassIndex(std::string_view class_name) const;

  bool operator==(const TaskSpec&) const = default;
};

// Validates class_names non-empty and unique; throws invalid-config.
void ValidateTask(const TaskSpec& task);

enum class Shape { kCircle, kTriangle, kDiamond, kPentagon, kHexagon };
enum class SizeClass { kSmall, kMedium, kLarge };
// Quadrants use the math convention: 1 upper-right, 2 upper-left,
// 3 lower-left, 4 lower-right.
enum class Quadrant { kQ1, kQ2, kQ3, kQ4 };
enum class Background { kWhite, kBlack, kColored };

inline constexpr std::array<int, 5> kPreserveTaskClassCounts = {5, 7, 3, 4, 3};
inline constexpr int kNumVariations = 5 * 7 * 3 * 4 * 3;

// The five PreserveTask tasks in canonical order:
// shape, color, size, location, background.
const std::vector<TaskSpec>& PreserveTaskRegistry();

struct VariationLabel {
  int shape = 0;
  int color = 0;
  int size = 0;
  int location = 0;
  int background = 0;

  bool operator==(const VariationLabel&) const = default;

  // Labels in registry order.
  std::array<int, 5> AsArray() const {
    return {shape, color, size, location, background};
  }
  bool IsValid() const;
};

// Mixed-radix enumeration of the 1260 variations, shape most significant.
int VariationIndex(const VariationLabel& label);
VariationLabel VariationFromIndex(int index);

}  // namespace overlearn::data

#endif  // OVERLEARN_DATA_TASK_HPP_
