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

#include "overlearn/train/config.hpp"

#include <set>

#include "overlearn/common/error.hpp"

namespace overlearn::train {

namespace {

[[noreturn]] void Invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidConfig, what);
}

}  // namespace

std::string_view SuppressionModeName(SuppressionMode mode) {
  switch (mode) {
    case SuppressionMode::kKnownNegativeLoss: return "known_negative_loss";
    case SuppressionMode::kKnownGr: return "known_gr";
    case SuppressionMode::kRandomGr: return "random_gr";
  }
  return "?";
}

SuppressionMode ParseSuppressionMode(std::string_view name) {
  for (SuppressionMode m : {SuppressionMode::kKnownNegativeLoss, SuppressionMode::kKnownGr,
                            SuppressionMode::kRandomGr}) {
    if (SuppressionModeName(m) == name) return m;
  }
  Invalid("unknown suppression mode '" + std::string(name) + "'");
}

int ModelConfig::FinalSide() const {
  int side = input_side;
  for (size_t b = 0; b < conv_blocks.size(); ++b) side /= 2;
  return side;
}

void ModelConfig::Validate() const {
  if (input_side < 2 || input_channels < 1) Invalid("input must be at least 2x2 with a channel");
  if (conv_blocks.empty()) Invalid("at least one conv block is required");
  {
    int side = input_side;
    for (const ConvBlock& block : conv_blocks) {
      if (block.filters < 1) Invalid("conv block needs >= 1 filter");
      if (block.kernel < 1 || block.kernel % 2 == 0) Invalid("conv kernels must be odd");
      side /= 2;
      if (side < 1) Invalid("too many conv blocks for the input side");
    }
  }
  if (fc_feature_dim < 1) Invalid("fc_feature_dim must be positive");
  if (head_hidden < 0) Invalid("head_hidden must be >= 0");
  data::ValidateTask(preserved_task);
  const int n_preserved = static_cast<int>(preserved_task.num_classes());
  if (n_preserved < 2) Invalid("preserved task needs >= 2 classes");
  if (!(lambda >= 0.0 && lambda <= 1.0)) Invalid("lambda must lie in [0, 1]");
  if (!(loss_cap_scale > 0.0)) Invalid("loss_cap_scale must be positive");
  if (!(lr > 0.0)) Invalid("learning rate must be positive");
  if (batch_size < 1) Invalid("batch_size must be positive");
  if (epochs < 1) Invalid("epochs must be positive");
  for (const SuppressionBranch& branch : suppression) {
    if (branch.n_classes < 2) Invalid("suppression branches need >= 2 classes");
    if (branch.alpha && !(*branch.alpha >= 0.0)) Invalid("alpha must be >= 0");
    if (branch.known()) {
      if (branch.task.empty()) Invalid("known-task suppression needs a task name");
      if (branch.task == preserved_task.name) {
        Invalid("cannot suppress the preserved task '" + branch.task + "'");
      }
    } else {
      if (!branch.task.empty()) Invalid("random-label branches take no task");
      if (branch.n_classes == n_preserved) {
        Invalid("random-label branch with n=" + std::to_string(branch.n_classes) +
                " matches the preserved task's class count");
      }
    }
  }
}

nlohmann::json ModelConfig::ToJson() const {
  nlohmann::json blocks = nlohmann::json::array();
  for (const ConvBlock& b : conv_blocks) blocks.push_back({{"filters", b.filters}, {"kernel", b.kernel}});
  nlohmann::json branches = nlohmann::json::array();
  for (const SuppressionBranch& s : suppression) {
    nlohmann::json j = {{"mode", SuppressionModeName(s.mode)}, {"n_classes", s.n_classes}};
    if (!s.task.empty()) j["task"] = s.task;
    if (s.alpha) j["alpha"] = *s.alpha;
    branches.push_back(j);
  }
  return {{"input_side", input_side},
          {"input_channels", input_channels},
          {"conv_blocks", blocks},
          {"fc_feature_dim", fc_feature_dim},
          {"head_hidden", head_hidden},
          {"preserved_task",
           {{"name", preserved_task.name}, {"classes", preserved_task.class_names}}},
          {"suppression", branches},
          {"lambda", lambda},
          {"loss_cap_scale", loss_cap_scale},
          {"lr", lr},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"seed", seed}};
}

ModelConfig ModelConfig::FromJson(const nlohmann::json& json) {
  try {
    ModelConfig c;
    c.input_side = json.at("input_side").get<int>();
    c.input_channels = json.at("input_channels").get<int>();
    c.conv_blocks.clear();
    for (const auto& b : json.at("conv_blocks")) {
      c.conv_blocks.push_back({b.at("filters").get<int>(), b.at("kernel").get<int>()});
    }
    c.fc_feature_dim = json.at("fc_feature_dim").get<int>();
    c.head_hidden = json.value("head_hidden", 0);
    c.preserved_task.name = json.at("preserved_task").at("name").get<std::string>();
    c.preserved_task.class_names =
        json.at("preserved_task").at("classes").get<std::vector<std::string>>();
    for (const auto& s : json.at("suppression")) {
      SuppressionBranch b;
      b.mode = ParseSuppressionMode(s.at("mode").get<std::string>());
      b.n_classes = s.at("n_classes").get<int>();
      b.task = s.value("task", std::string());
      if (s.contains("alpha")) b.alpha = s.at("alpha").get<double>();
      c.suppression.push_back(b);
    }
    c.lambda = json.at("lambda").get<double>();
    c.loss_cap_scale = json.value("loss_cap_scale", 4.0);
    c.lr = json.at("lr").get<double>();
    c.batch_size = json.at("batch_size").get<int>();
    c.epochs = json.at("epochs").get<int>();
    c.seed = json.at("seed").get<uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("model config: ") + e.what());
  }
}

std::vector<SuppressionBranch> DefaultRandomBranches(
    const std::vector<data::TaskSpec>& registry, const data::TaskSpec& preserved) {
  std::set<int> counts;
  for (const data::TaskSpec& t : registry) counts.insert(static_cast<int>(t.num_classes()));
  counts.erase(static_cast<int>(preserved.num_classes()));
  std::vector<SuppressionBranch> out;
  for (int n : counts) {
    if (n >= 2) out.push_back({SuppressionMode::kRandomGr, n, "", std::nullopt});
  }
  return out;
}

double CombinedLoss(double preserved_loss, const std::vector<double>& suppression_losses,
                    double lambda) {
  if (suppression_losses.empty()) return preserved_loss;
  double sum = 0.0;
  for (double l : suppression_losses) sum += l;
  return lambda * preserved_loss - (1.0 - lambda) * sum;
}

}  // namespace overlearn::train
