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

#ifndef OVERLEARN_TRAIN_CHECKPOINT_HPP_
#define OVERLEARN_TRAIN_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"
#include "overlearn/ad/adam.hpp"
#include "overlearn/train/config.hpp"
#include "overlearn/train/dataset.hpp"

namespace overlearn::train {

struct EpochLog {
  int epoch = 0;
  double preserved_train_acc = 0.0;
  double preserved_test_acc = 0.0;
  double preserved_loss = 0.0;
  std::vector<double> branch_losses;
  double combined_loss = 0.0;

  nlohmann::json ToJson() const;
  static EpochLog FromJson(const nlohmann::json& json);
  bool operator==(const EpochLog&) const = default;
};

// Complete training state after `epoch` finished epochs. The random streams
// are pure functions of (config.seed, epoch, batch), so the seed and the
// epoch counter are the whole RNG state.
struct Checkpoint {
  static constexpr uint32_t kVersion = 1;

  ModelConfig config;
  Normalization normalization;
  int epoch = 0;
  std::vector<ad::Parameter> parameters;  // grads are not stored
  ad::AdamState adam;
  double best_test_acc = -1.0;
  int best_epoch = 0;
  std::vector<EpochLog> history;
};

// Layout: "OVLCKPT\0", u32 version, u64 header length, JSON header, then the
// little-endian f32 blobs the header's tensor table points into.
std::vector<uint8_t> SerializeCheckpoint(const Checkpoint& checkpoint);
Checkpoint ParseCheckpoint(std::span<const uint8_t> bytes);

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace overlearn::train

#endif  // OVERLEARN_TRAIN_CHECKPOINT_HPP_
