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

#include "overlearn/data/manifest.hpp"

#include <charconv>
#include <sstream>

#include "overlearn/common/error.hpp"
#include "overlearn/common/io.hpp"

namespace overlearn::data {

namespace {

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

int ParseInt(std::string_view s) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kParse, "not an integer: '" + std::string(s) + "'");
  }
  return value;
}

}  // namespace

std::string_view SplitName(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  throw Error(ErrorCode::kParse, "unknown split '" + std::string(name) + "'");
}

size_t Manifest::TaskIndex(std::string_view name) const {
  for (size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].name == name) return i;
  }
  throw Error(ErrorCode::kInvalidConfig,
              "dataset has no task '" + std::string(name) + "'");
}

size_t Manifest::Count(Split split) const {
  size_t n = 0;
  for (const auto& row : rows) n += row.split == split;
  return n;
}

std::vector<const ManifestRow*> Manifest::Rows(Split split) const {
  std::vector<const ManifestRow*> out;
  for (const auto& row : rows) {
    if (row.split == split) out.push_back(&row);
  }
  return out;
}

std::vector<size_t> Manifest::ClassHistogram(size_t task, Split split) const {
  std::vector<size_t> hist(tasks.at(task).num_classes(), 0);
  for (const auto& row : rows) {
    if (row.split == split) ++hist.at(row.labels.at(task));
  }
  return hist;
}

std::string FormatManifest(const Manifest& manifest) {
  nlohmann::json header;
  header["format"] = "overlearn-manifest";
  header["version"] = Manifest::kFormatVersion;
  header["generator"] = manifest.generator;
  header["tasks"] = nlohmann::json::array();
  for (const auto& task : manifest.tasks) {
    header["tasks"].push_back({{"name", task.name}, {"classes", task.class_names}});
  }

  std::ostringstream os;
  os << "# " << header.dump() << '\n';
  os << "path,split";
  for (const auto& task : manifest.tasks) os << ',' << task.name;
  os << ",instance\n";
  for (const auto& row : manifest.rows) {
    os << row.path << ',' << SplitName(row.split);
    for (size_t t = 0; t < manifest.tasks.size(); ++t) {
      os << ',' << manifest.tasks[t].class_names.at(row.labels.at(t));
    }
    os << ',' << row.instance << '\n';
  }
  return os.str();
}

Manifest ParseManifest(std::string_view text) {
  Manifest manifest;
  size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    return true;
  };

  std::string_view line;
  if (!next_line(line) || !line.starts_with("# ")) {
    throw Error(ErrorCode::kParse, "manifest is missing its JSON header line");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line.substr(2));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("manifest header: ") + e.what());
  }
  if (header.value("format", "") != "overlearn-manifest") {
    throw Error(ErrorCode::kParse, "not an overlearn manifest");
  }
  if (header.value("version", 0) != Manifest::kFormatVersion) {
    throw Error(ErrorCode::kParse, "unsupported manifest version");
  }
  manifest.generator = header.value("generator", nlohmann::json::object());
  for (const auto& t : header.at("tasks")) {
    manifest.tasks.push_back(
        {t.at("name").get<std::string>(), t.at("classes").get<std::vector<std::string>>()});
  }

  if (!next_line(line)) throw Error(ErrorCode::kParse, "manifest has no column row");
  const auto columns = SplitFields(line);
  const size_t n_tasks = manifest.tasks.size();
  if (columns.size() != n_tasks + 3 || columns[0] != "path" ||
      columns[1] != "split" || columns.back() != "instance") {
    throw Error(ErrorCode::kParse, "manifest column row does not match its header");
  }
  for (size_t t = 0; t < n_tasks; ++t) {
    if (columns[t + 2] != manifest.tasks[t].name) {
      throw Error(ErrorCode::kParse, "manifest column order does not match task order");
    }
  }

  while (next_line(line)) {
    if (line.empty()) continue;
    const auto fields = SplitFields(line);
    if (fields.size() != columns.size()) {
      throw Error(ErrorCode::kParse, "manifest row has wrong field count");
    }
    ManifestRow row;
    row.path = std::string(fields[0]);
    row.split = ParseSplit(fields[1]);
    for (size_t t = 0; t < n_tasks; ++t) {
      row.labels.push_back(manifest.tasks[t].ClassIndex(fields[t + 2]));
    }
    row.instance = ParseInt(fields.back());
    manifest.rows.push_back(std::move(row));
  }
  return manifest;
}

void WriteManifest(const std::filesystem::path& path, const Manifest& manifest) {
  WriteFileText(path, FormatManifest(manifest));
}

Manifest ReadManifest(const std::filesystem::path& path) {
  return ParseManifest(ReadFileText(path));
}

}  // namespace overlearn::data
