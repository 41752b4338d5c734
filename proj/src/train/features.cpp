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

#include "overlearn/train/features.hpp"

#include <algorithm>
#include <cstring>

#include "overlearn/common/error.hpp"
#include "overlearn/common/io.hpp"
#include "overlearn/train/model.hpp"

namespace overlearn::train {

namespace fs = std::filesystem;

namespace {

constexpr int64_t kBatch = 128;

fs::path WithSuffix(const fs::path& stem, const char* suffix) {
  return fs::path(stem.string() + suffix);
}

}  // namespace

size_t FeatureTable::TaskIndex(const std::string& name) const {
  for (size_t t = 0; t < tasks.size(); ++t) {
    if (tasks[t].name == name) return t;
  }
  throw Error(ErrorCode::kInvalidConfig, "feature table has no task '" + name + "'");
}

FeatureTable ExtractFeatures(const Checkpoint& checkpoint, const ImageSet& images,
                             const std::vector<data::TaskSpec>& tasks, data::Split split) {
  Model model(checkpoint.config);
  auto& params = model.parameters();
  if (checkpoint.parameters.size() != params.size()) {
    throw Error(ErrorCode::kConfigMismatch, "checkpoint does not match its own config");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    if (checkpoint.parameters[i].value.shape() != params[i].value.shape()) {
      throw Error(ErrorCode::kConfigMismatch, "checkpoint tensor " + params[i].name +
                                                  " has the wrong shape");
    }
    params[i].value = checkpoint.parameters[i].value;
  }
  const ModelConfig& c = checkpoint.config;
  if (images.images.rank() != 4 || images.images.dim(1) != c.input_channels ||
      images.images.dim(2) != c.input_side || images.images.dim(3) != c.input_side) {
    throw Error(ErrorCode::kConfigMismatch,
                "images " + ad::ShapeString(images.images.shape()) +
                    " do not match the checkpoint input");
  }
  if (images.labels.size() != tasks.size()) {
    throw Error(ErrorCode::kConfigMismatch, "label table does not follow the registry");
  }

  ad::Tensor normalized = images.images;
  ApplyNormalization(checkpoint.normalization, normalized);

  FeatureTable table;
  table.rows = images.size();
  table.cols = c.fc_feature_dim;
  table.values.resize(static_cast<size_t>(table.rows * table.cols));
  table.tasks = tasks;
  table.labels = images.labels;
  table.split = split;

  ad::Graph& g = model.graph();
  g.SetTraining(false);
  std::vector<int64_t> rows;
  for (int64_t start = 0; start < table.rows; start += kBatch) {
    rows.clear();
    for (int64_t r = start; r < std::min(table.rows, start + kBatch); ++r) rows.push_back(r);
    GatherRows(normalized, rows, g.MutableInput(model.input()));
    g.Forward(model.features());
    const ad::Tensor& f = g.Value(model.features());
    std::copy(f.data(), f.data() + f.size(), table.values.data() + start * table.cols);
  }
  return table;
}

FeatureTable ExtractFeatures(const Checkpoint& checkpoint, const data::Manifest& manifest,
                             const fs::path& dataset_dir, data::Split split) {
  const ImageSet images = LoadImageSet(manifest, dataset_dir, split);
  FeatureTable table = ExtractFeatures(checkpoint, images, manifest.tasks, split);
  table.provenance = {{"preserved_task", checkpoint.config.preserved_task.name},
                      {"checkpoint_epoch", checkpoint.epoch},
                      {"checkpoint_fingerprint", Fingerprint(SerializeCheckpoint(checkpoint))},
                      {"dataset", dataset_dir.filename().string()}};
  return table;
}

void WriteFeatures(const fs::path& stem, const FeatureTable& table) {
  if (table.values.size() != static_cast<size_t>(table.rows * table.cols)) {
    throw Error(ErrorCode::kShapeMismatch, "feature values do not fill rows x cols");
  }
  nlohmann::json tasks = nlohmann::json::array();
  nlohmann::json labels = nlohmann::json::object();
  for (size_t t = 0; t < table.tasks.size(); ++t) {
    tasks.push_back({{"name", table.tasks[t].name}, {"classes", table.tasks[t].class_names}});
    labels[table.tasks[t].name] = table.labels[t];
  }
  const nlohmann::json sidecar = {
      {"format", "overlearn-features"},
      {"version", 1},
      {"dtype", "float32-le"},
      {"rows", table.rows},
      {"cols", table.cols},
      {"split", data::SplitName(table.split)},
      {"data_file", WithSuffix(stem, ".f32").filename().string()},
      {"tasks", tasks},
      {"labels", labels},
      {"provenance", table.provenance},
  };
  const auto* bytes = reinterpret_cast<const uint8_t*>(table.values.data());
  WriteFileBytes(WithSuffix(stem, ".f32"), {bytes, table.values.size() * sizeof(float)});
  WriteFileText(WithSuffix(stem, ".json"), sidecar.dump(1) + "\n");
}

FeatureTable ReadFeatures(const fs::path& stem) {
  FeatureTable table;
  try {
    const nlohmann::json sidecar = nlohmann::json::parse(ReadFileText(WithSuffix(stem, ".json")));
    table.rows = sidecar.at("rows").get<int64_t>();
    table.cols = sidecar.at("cols").get<int64_t>();
    table.split = data::ParseSplit(sidecar.at("split").get<std::string>());
    table.provenance = sidecar.value("provenance", nlohmann::json::object());
    for (const auto& t : sidecar.at("tasks")) {
      data::TaskSpec task{t.at("name").get<std::string>(),
                          t.at("classes").get<std::vector<std::string>>()};
      table.labels.push_back(sidecar.at("labels").at(task.name).get<std::vector<int>>());
      table.tasks.push_back(std::move(task));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("feature sidecar: ") + e.what());
  }
  const std::vector<uint8_t> bytes = ReadFileBytes(WithSuffix(stem, ".f32"));
  if (bytes.size() != static_cast<size_t>(table.rows * table.cols) * sizeof(float)) {
    throw Error(ErrorCode::kTruncatedPayload, "feature file size does not match its sidecar");
  }
  table.values.resize(static_cast<size_t>(table.rows * table.cols));
  std::memcpy(table.values.data(), bytes.data(), bytes.size());
  for (const auto& column : table.labels) {
    if (static_cast<int64_t>(column.size()) != table.rows) {
      throw Error(ErrorCode::kTruncatedPayload, "label column length differs from rows");
    }
  }
  return table;
}

}  // namespace overlearn::train
