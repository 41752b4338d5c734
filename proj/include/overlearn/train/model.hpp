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

#ifndef OVERLEARN_TRAIN_MODEL_HPP_
#define OVERLEARN_TRAIN_MODEL_HPP_

#include <cstdint>
#include <string_view>
#include <vector>

#include "overlearn/ad/graph.hpp"
#include "overlearn/train/config.hpp"

namespace overlearn::train {

struct HeadNodes {
  ad::NodeId logits;
  ad::NodeId target;  // [N] class indices
  ad::NodeId loss;    // batch-mean cross-entropy (clamped for suppression heads)
};

// Shared trunk f(x) = relu(fc(flatten(conv blocks(x)))) with a linear
// preserved head and one head per suppression branch.
//
// Gradient-reversal branches see GradReverse(f(x), alpha) and contribute
// +Ls to the backpropagated objective, so the head minimizes its loss while
// the trunk receives -alpha * dLs. Negative-loss branches see f(x) directly
// and contribute -(1 - lambda) * Ls. Without branches the objective is Lp.
class Model {
 public:
  // Parameters get fan-in scaled uniform values drawn from per-name streams
  // of config.seed; biases start at zero.
  explicit Model(ModelConfig config);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return config_; }
  std::vector<ad::Parameter>& parameters() { return params_; }
  const std::vector<ad::Parameter>& parameters() const { return params_; }
  std::vector<ad::Parameter*> parameter_ptrs();
  ad::Parameter& parameter(std::string_view name);
  int64_t ParameterCount() const;

  ad::Graph& graph() { return graph_; }
  ad::NodeId input() const { return input_; }
  ad::NodeId features() const { return features_; }
  const HeadNodes& preserved() const { return preserved_; }
  const std::vector<HeadNodes>& branches() const { return branches_; }
  ad::NodeId objective() const { return objective_; }

 private:
  ad::Parameter& AddParameter(std::string name, ad::Shape shape, int64_t fan_in);

  ModelConfig config_;
  std::vector<ad::Parameter> params_;
  ad::Graph graph_;
  ad::NodeId input_;
  ad::NodeId features_;
  HeadNodes preserved_;
  std::vector<HeadNodes> branches_;
  ad::NodeId objective_;
};

// Closed-form parameter count of the topology `config` declares.
int64_t ExpectedParameterCount(const ModelConfig& config);

}  // namespace overlearn::train

#endif  // OVERLEARN_TRAIN_MODEL_HPP_
