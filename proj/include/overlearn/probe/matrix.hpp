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

#ifndef OVERLEARN_PROBE_MATRIX_HPP_
#define OVERLEARN_PROBE_MATRIX_HPP_

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "overlearn/data/manifest.hpp"
#include "overlearn/probe/probe.hpp"
#include "overlearn/train/checkpoint.hpp"

namespace overlearn::probe {

// cells[i][j]: test accuracy of probing task j on features of the model
// preserved for task i. chance[i][j] is the matching majority-class rate.
struct PerformanceMatrix {
  static constexpr int kFormatVersion = 1;

  std::vector<data::TaskSpec> tasks;
  std::vector<std::vector<double>> cells;
  std::vector<std::vector<double>> chance;
  nlohmann::json provenance = nlohmann::json::object();

  size_t size() const { return tasks.size(); }
  // Throws shape-mismatch unless square and aligned with `tasks`, and
  // out-of-range-cell for values outside [0, 1].
  void Validate() const;

  nlohmann::json ToJson() const;
  static PerformanceMatrix FromJson(const nlohmann::json& json);
  bool operator==(const PerformanceMatrix&) const = default;
};

std::string FormatMatrixCsv(const PerformanceMatrix& matrix);
// Parses the cells of a CSV written by FormatMatrixCsv; task class lists are
// not part of the CSV and come back empty.
PerformanceMatrix ParseMatrixCsv(std::string_view text);

void WriteMatrix(const std::filesystem::path& json_path, const PerformanceMatrix& matrix);
PerformanceMatrix ReadMatrix(const std::filesystem::path& json_path);

struct ProbeRow {
  std::vector<ProbeResult> results;  // one per task, registry order
  std::string checkpoint_fingerprint;
};

// Probes every registry task on one checkpoint's frozen features.
ProbeRow ProbeCheckpoint(const train::Checkpoint& checkpoint, const data::Manifest& manifest,
                         const std::filesystem::path& dataset_dir, const ProbeConfig& config);

// Copy of `base` whose row `row` comes from another checkpoint's probes.
PerformanceMatrix ReplaceRow(const PerformanceMatrix& base, size_t row, const ProbeRow& probes,
                             const nlohmann::json& provenance);

using ProgressFn = std::function<void(const std::string& preserved, const std::string& probed,
                                      const ProbeResult&)>;

// Expects `runs_dir/<task>/best.ckpt` for every task in the manifest and
// throws missing-checkpoint otherwise. The same probe seed is used for
// every cell.
PerformanceMatrix BuildMatrix(const std::filesystem::path& runs_dir,
                              const std::filesystem::path& dataset_dir,
                              const ProbeConfig& config, const ProgressFn& progress = {});

}  // namespace overlearn::probe

#endif  // OVERLEARN_PROBE_MATRIX_HPP_
