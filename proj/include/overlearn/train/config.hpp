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

#ifndef OVERLEARN_TRAIN_CONFIG_HPP_
#define OVERLEARN_TRAIN_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "overlearn/data/task.hpp"

namespace overlearn::train {

enum class SuppressionMode { kKnownNegativeLoss, kKnownGr, kRandomGr };

std::string_view SuppressionModeName(SuppressionMode mode);
SuppressionMode ParseSuppressionMode(std::string_view name);

// One adversarial head attached to the shared features.
struct SuppressionBranch {
  SuppressionMode mode = SuppressionMode::kRandomGr;
  int n_classes = 0;
  // Task whose true labels the head sees; empty for random labels.
  std::string task;
  // Gradient-reversal scale; unset means 1 - lambda.
  std::optional<double> alpha;

  bool known() const { return mode != SuppressionMode::kRandomGr; }
  bool operator==(const SuppressionBranch&) const = default;
};

struct ConvBlock {
  int filters = 0;
  int kernel = 3;

  bool operator==(const ConvBlock&) const = default;
};

struct ModelConfig {
  int input_side = 64;
  int input_channels = 3;
  std::vector<ConvBlock> conv_blocks = {{16, 3}, {32, 3}};
  int fc_feature_dim = 256;
  // Width of an optional ReLU hidden layer inside each suppression head;
  // 0 attaches a linear classifier directly to the features.
  int head_hidden = 0;
  data::TaskSpec preserved_task;
  std::vector<SuppressionBranch> suppression;
  double lambda = 0.5;
  // Branch cross-entropy is capped at loss_cap_scale * ln(n) wherever the
  // trunk climbs it.
  double loss_cap_scale = 4.0;
  double lr = 1e-4;
  int batch_size = 32;
  int epochs = 30;
  uint64_t seed = 0;

  // Throws invalid-config. The preserved task's class count is checked
  // against every random branch.
  void Validate() const;
  double BranchAlpha(size_t branch) const {
    return suppression[branch].alpha.value_or(1.0 - lambda);
  }
  // Side of the last feature map after all pooling.
  int FinalSide() const;

  nlohmann::json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& json);

  bool operator==(const ModelConfig&) const = default;
};

// One random branch per distinct class count in `registry` other than the
// preserved task's own count.
std::vector<SuppressionBranch> DefaultRandomBranches(
    const std::vector<data::TaskSpec>& registry, const data::TaskSpec& preserved);

// Composite objective as reported in logs: lambda*Lp - (1-lambda)*sum(Ls).
// With no suppression terms the objective is Lp itself.
double CombinedLoss(double preserved_loss, const std::vector<double>& suppression_losses,
                    double lambda);

}  // namespace overlearn::train

#endif  // OVERLEARN_TRAIN_CONFIG_HPP_
