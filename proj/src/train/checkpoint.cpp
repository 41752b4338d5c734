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

#include "overlearn/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "overlearn/common/error.hpp"
#include "overlearn/common/io.hpp"

namespace overlearn::train {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written in host order");

namespace {

constexpr char kMagic[8] = {'O', 'V', 'L', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void AppendPod(std::vector<uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T ReadPod(std::span<const uint8_t> bytes, size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

[[noreturn]] void Corrupt(const std::string& what) {
  throw Error(ErrorCode::kTruncatedPayload, "checkpoint: " + what);
}

}  // namespace

nlohmann::json EpochLog::ToJson() const {
  return {{"epoch", epoch},
          {"preserved_train_acc", preserved_train_acc},
          {"preserved_test_acc", preserved_test_acc},
          {"preserved_loss", preserved_loss},
          {"branch_losses", branch_losses},
          {"combined_loss", combined_loss}};
}

EpochLog EpochLog::FromJson(const nlohmann::json& json) {
  EpochLog log;
  log.epoch = json.at("epoch").get<int>();
  log.preserved_train_acc = json.at("preserved_train_acc").get<double>();
  log.preserved_test_acc = json.at("preserved_test_acc").get<double>();
  log.preserved_loss = json.at("preserved_loss").get<double>();
  log.branch_losses = json.at("branch_losses").get<std::vector<double>>();
  log.combined_loss = json.at("combined_loss").get<double>();
  return log;
}

std::vector<uint8_t> SerializeCheckpoint(const Checkpoint& ck) {
  std::vector<const ad::Tensor*> blobs;
  nlohmann::json table = nlohmann::json::array();
  uint64_t offset = 0;
  auto add = [&](const std::string& name, const ad::Tensor& t) {
    table.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += static_cast<uint64_t>(t.size()) * sizeof(float);
    blobs.push_back(&t);
  };
  for (const ad::Parameter& p : ck.parameters) add("param/" + p.name, p.value);
  if (!ck.adam.m.empty()) {
    for (size_t i = 0; i < ck.parameters.size(); ++i) {
      add("adam_m/" + ck.parameters[i].name, ck.adam.m.at(i));
      add("adam_v/" + ck.parameters[i].name, ck.adam.v.at(i));
    }
  }
  std::vector<uint8_t> payload;
  payload.reserve(offset);
  for (const ad::Tensor* t : blobs) {
    const auto* p = reinterpret_cast<const uint8_t*>(t->data());
    payload.insert(payload.end(), p, p + t->size() * sizeof(float));
  }

  nlohmann::json history = nlohmann::json::array();
  for (const EpochLog& e : ck.history) history.push_back(e.ToJson());
  const nlohmann::json header = {
      {"format", "overlearn-checkpoint"},
      {"config", ck.config.ToJson()},
      {"normalization", ck.normalization.ToJson()},
      {"epoch", ck.epoch},
      {"rng", {{"seed", ck.config.seed}, {"next_epoch", ck.epoch}}},
      {"adam_step", ck.adam.step},
      {"best_test_acc", ck.best_test_acc},
      {"best_epoch", ck.best_epoch},
      {"history", history},
      {"tensors", table},
      {"payload_bytes", payload.size()},
      {"payload_fingerprint", Fingerprint(payload)},
  };
  const std::string text = header.dump();

  std::vector<uint8_t> out(kMagic, kMagic + sizeof(kMagic));
  AppendPod<uint32_t>(out, Checkpoint::kVersion);
  AppendPod<uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Checkpoint ParseCheckpoint(std::span<const uint8_t> bytes) {
  constexpr size_t kPrefix = sizeof(kMagic) + sizeof(uint32_t) + sizeof(uint64_t);
  if (bytes.size() < kPrefix) Corrupt("file shorter than its prefix");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::kBadMagic, "not a checkpoint file");
  }
  const uint32_t version = ReadPod<uint32_t>(bytes, sizeof(kMagic));
  if (version != Checkpoint::kVersion) {
    throw Error(ErrorCode::kConfigMismatch,
                "unsupported checkpoint version " + std::to_string(version));
  }
  const uint64_t header_len = ReadPod<uint64_t>(bytes, sizeof(kMagic) + sizeof(uint32_t));
  if (bytes.size() - kPrefix < header_len) Corrupt("header cut short");
  const auto header_bytes = bytes.subspan(kPrefix, header_len);
  const auto payload = bytes.subspan(kPrefix + header_len);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_bytes.begin(), header_bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("checkpoint header: ") + e.what());
  }
  if (header.value("payload_bytes", uint64_t{0}) != payload.size()) {
    Corrupt("payload size does not match header");
  }
  if (header.value("payload_fingerprint", std::string()) != Fingerprint(payload)) {
    throw Error(ErrorCode::kChecksumMismatch, "checkpoint payload fingerprint differs");
  }

  Checkpoint ck;
  try {
    ck.config = ModelConfig::FromJson(header.at("config"));
    ck.normalization = Normalization::FromJson(header.at("normalization"));
    ck.epoch = header.at("epoch").get<int>();
    ck.adam.step = header.at("adam_step").get<int64_t>();
    ck.best_test_acc = header.at("best_test_acc").get<double>();
    ck.best_epoch = header.at("best_epoch").get<int>();
    for (const auto& e : header.at("history")) ck.history.push_back(EpochLog::FromJson(e));

    for (const auto& entry : header.at("tensors")) {
      const std::string name = entry.at("name").get<std::string>();
      ad::Shape shape = entry.at("shape").get<ad::Shape>();
      const uint64_t offset = entry.at("offset").get<uint64_t>();
      const uint64_t count = static_cast<uint64_t>(ad::NumElements(shape));
      if (offset + count * sizeof(float) > payload.size()) Corrupt(name + " out of bounds");
      std::vector<float> values(count);
      std::memcpy(values.data(), payload.data() + offset, count * sizeof(float));
      ad::Tensor tensor(std::move(shape), std::move(values));
      const auto slash = name.find('/');
      const std::string kind = name.substr(0, slash), pname = name.substr(slash + 1);
      if (kind == "param") {
        ad::Tensor grad(tensor.shape());
        ck.parameters.push_back({pname, std::move(tensor), std::move(grad)});
      } else if (kind == "adam_m") {
        ck.adam.m.push_back(std::move(tensor));
      } else if (kind == "adam_v") {
        ck.adam.v.push_back(std::move(tensor));
      } else {
        Corrupt("unknown tensor kind " + kind);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("checkpoint header: ") + e.what());
  }
  if (!ck.adam.m.empty() &&
      (ck.adam.m.size() != ck.parameters.size() || ck.adam.v.size() != ck.parameters.size())) {
    Corrupt("optimizer state does not cover every parameter");
  }
  return ck;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::vector<uint8_t> bytes = SerializeCheckpoint(checkpoint);
  const std::filesystem::path partial = path.string() + ".part";
  WriteFileBytes(partial, bytes);
  std::filesystem::rename(partial, path);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kMissingCheckpoint, "no checkpoint at " + path.string());
  }
  return ParseCheckpoint(ReadFileBytes(path));
}

}  // namespace overlearn::train
