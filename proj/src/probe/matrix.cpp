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

#include "overlearn/probe/matrix.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "overlearn/common/error.hpp"
#include "overlearn/common/io.hpp"
#include "overlearn/train/features.hpp"
#include "overlearn/train/trainer.hpp"

namespace overlearn::probe {

namespace fs = std::filesystem;

void PerformanceMatrix::Validate() const {
  const size_t n = tasks.size();
  if (cells.size() != n) throw Error(ErrorCode::kShapeMismatch, "matrix rows != task count");
  for (const auto& row : cells) {
    if (row.size() != n) throw Error(ErrorCode::kShapeMismatch, "matrix is not square");
    for (double v : row) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::kOutOfRangeCell, "matrix cell outside [0, 1]");
      }
    }
  }
  if (!chance.empty() && chance.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "chance table does not match the matrix");
  }
}

nlohmann::json PerformanceMatrix::ToJson() const {
  nlohmann::json task_list = nlohmann::json::array();
  for (const data::TaskSpec& t : tasks) {
    task_list.push_back({{"name", t.name}, {"classes", t.class_names}});
  }
  return {{"format", "overlearn-matrix"}, {"version", kFormatVersion},
          {"tasks", task_list},           {"cells", cells},
          {"chance", chance},             {"provenance", provenance}};
}

PerformanceMatrix PerformanceMatrix::FromJson(const nlohmann::json& json) {
  PerformanceMatrix m;
  try {
    if (json.value("format", std::string()) != "overlearn-matrix") {
      throw Error(ErrorCode::kParse, "not a performance matrix document");
    }
    for (const auto& t : json.at("tasks")) {
      m.tasks.push_back({t.at("name").get<std::string>(),
                         t.value("classes", std::vector<std::string>())});
    }
    m.cells = json.at("cells").get<std::vector<std::vector<double>>>();
    m.chance = json.value("chance", std::vector<std::vector<double>>());
    m.provenance = json.value("provenance", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("matrix: ") + e.what());
  }
  m.Validate();
  return m;
}

std::string FormatMatrixCsv(const PerformanceMatrix& matrix) {
  matrix.Validate();
  std::string out = "preserved";
  for (const data::TaskSpec& t : matrix.tasks) out += "," + t.name;
  out += "\n";
  char buf[40];
  for (size_t i = 0; i < matrix.size(); ++i) {
    out += matrix.tasks[i].name;
    for (double v : matrix.cells[i]) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

PerformanceMatrix ParseMatrixCsv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    return parts;
  };
  if (!std::getline(in, line)) throw Error(ErrorCode::kParse, "empty matrix CSV");
  const std::vector<std::string> header = split(line);
  if (header.size() < 2) throw Error(ErrorCode::kParse, "matrix CSV header has no tasks");
  PerformanceMatrix m;
  for (size_t k = 1; k < header.size(); ++k) m.tasks.push_back({header[k], {}});
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> parts = split(line);
    if (parts.size() != header.size()) throw Error(ErrorCode::kParse, "ragged matrix CSV row");
    std::vector<double> row;
    for (size_t k = 1; k < parts.size(); ++k) {
      try {
        row.push_back(std::stod(parts[k]));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kParse, "bad matrix CSV value '" + parts[k] + "'");
      }
    }
    m.cells.push_back(std::move(row));
  }
  m.Validate();
  return m;
}

void WriteMatrix(const fs::path& json_path, const PerformanceMatrix& matrix) {
  matrix.Validate();
  WriteFileText(json_path, matrix.ToJson().dump(2) + "\n");
  fs::path csv = json_path;
  csv.replace_extension(".csv");
  WriteFileText(csv, FormatMatrixCsv(matrix));
}

PerformanceMatrix ReadMatrix(const fs::path& json_path) {
  try {
    return PerformanceMatrix::FromJson(nlohmann::json::parse(ReadFileText(json_path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("matrix: ") + e.what());
  }
}

ProbeRow ProbeCheckpoint(const train::Checkpoint& checkpoint, const data::Manifest& manifest,
                         const fs::path& dataset_dir, const ProbeConfig& config) {
  const train::FeatureTable train_features =
      train::ExtractFeatures(checkpoint, manifest, dataset_dir, data::Split::kTrain);
  const train::FeatureTable test_features =
      train::ExtractFeatures(checkpoint, manifest, dataset_dir, data::Split::kTest);
  ProbeRow row;
  row.checkpoint_fingerprint = train_features.provenance.at("checkpoint_fingerprint");
  for (const data::TaskSpec& task : manifest.tasks) {
    row.results.push_back(ProbeTask(train_features, test_features, task.name, config));
  }
  return row;
}

PerformanceMatrix ReplaceRow(const PerformanceMatrix& base, size_t row, const ProbeRow& probes,
                             const nlohmann::json& provenance) {
  base.Validate();
  if (row >= base.size() || probes.results.size() != base.size()) {
    throw Error(ErrorCode::kShapeMismatch, "replacement row does not fit the matrix");
  }
  PerformanceMatrix m = base;
  if (m.chance.empty()) m.chance = m.cells;
  nlohmann::json results = nlohmann::json::array();
  for (size_t j = 0; j < base.size(); ++j) {
    m.cells[row][j] = probes.results[j].test_accuracy;
    m.chance[row][j] = probes.results[j].chance;
    results.push_back(probes.results[j].ToJson());
  }
  m.provenance["replaced_row"] = {{"row", row},
                                  {"preserved_task", base.tasks[row].name},
                                  {"checkpoint_fingerprint", probes.checkpoint_fingerprint},
                                  {"source", provenance},
                                  {"probes", results}};
  m.Validate();
  return m;
}

PerformanceMatrix BuildMatrix(const fs::path& runs_dir, const fs::path& dataset_dir,
                              const ProbeConfig& config, const ProgressFn& progress) {
  config.Validate();
  const fs::path manifest_path = dataset_dir / data::kManifestFileName;
  const data::Manifest manifest = data::ReadManifest(manifest_path);
  const size_t n = manifest.tasks.size();
  if (n < 2) throw Error(ErrorCode::kTooFewTasks, "a matrix needs at least two tasks");

  std::vector<fs::path> checkpoints;
  for (const data::TaskSpec& task : manifest.tasks) {
    const fs::path p = runs_dir / task.name / train::kBestCheckpoint;
    if (!fs::exists(p)) {
      throw Error(ErrorCode::kMissingCheckpoint, "no checkpoint for task '" + task.name +
                                                     "' at " + p.string());
    }
    checkpoints.push_back(p);
  }

  PerformanceMatrix m;
  m.tasks = manifest.tasks;
  nlohmann::json rows = nlohmann::json::array();
  for (size_t i = 0; i < n; ++i) {
    const train::Checkpoint ck = train::LoadCheckpoint(checkpoints[i]);
    if (ck.config.preserved_task.name != manifest.tasks[i].name) {
      throw Error(ErrorCode::kConfigMismatch, checkpoints[i].string() +
                                                  " preserves '" +
                                                  ck.config.preserved_task.name + "'");
    }
    const ProbeRow row = ProbeCheckpoint(ck, manifest, dataset_dir, config);
    std::vector<double> cells, chance;
    nlohmann::json probes = nlohmann::json::array();
    for (size_t j = 0; j < n; ++j) {
      cells.push_back(row.results[j].test_accuracy);
      chance.push_back(row.results[j].chance);
      probes.push_back(row.results[j].ToJson());
      if (progress) progress(manifest.tasks[i].name, manifest.tasks[j].name, row.results[j]);
    }
    m.cells.push_back(std::move(cells));
    m.chance.push_back(std::move(chance));
    rows.push_back({{"preserved_task", manifest.tasks[i].name},
                    {"checkpoint", (fs::path(manifest.tasks[i].name) / train::kBestCheckpoint)
                                       .generic_string()},
                    {"checkpoint_fingerprint", row.checkpoint_fingerprint},
                    {"checkpoint_epoch", ck.epoch},
                    {"probes", probes}});
  }
  m.provenance = {{"dataset_manifest_fingerprint", FileFingerprint(manifest_path)},
                  {"probe_config", config.ToJson()},
                  {"rows", rows}};
  return m;
}

}  // namespace overlearn::probe
