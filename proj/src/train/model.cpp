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

#include "overlearn/train/model.hpp"

#include <cmath>

#include "overlearn/common/error.hpp"
#include "overlearn/common/rng.hpp"

namespace overlearn::train {

using ad::NodeId;

namespace {

int64_t DenseCount(int64_t in, int64_t out) { return in * out + out; }

}  // namespace

int64_t ExpectedParameterCount(const ModelConfig& config) {
  int64_t total = 0;
  int64_t channels = config.input_channels;
  for (const ConvBlock& b : config.conv_blocks) {
    total += int64_t{b.filters} * channels * b.kernel * b.kernel + b.filters;
    channels = b.filters;
  }
  const int64_t side = config.FinalSide();
  total += DenseCount(channels * side * side, config.fc_feature_dim);
  total += DenseCount(config.fc_feature_dim,
                      static_cast<int64_t>(config.preserved_task.num_classes()));
  for (const SuppressionBranch& s : config.suppression) {
    if (config.head_hidden > 0) {
      total += DenseCount(config.fc_feature_dim, config.head_hidden) +
               DenseCount(config.head_hidden, s.n_classes);
    } else {
      total += DenseCount(config.fc_feature_dim, s.n_classes);
    }
  }
  return total;
}

ad::Parameter& Model::AddParameter(std::string name, ad::Shape shape, int64_t fan_in) {
  ad::Parameter p{std::move(name), ad::Tensor(shape), ad::Tensor(shape)};
  if (fan_in > 0) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    Rng rng = Rng::Stream(config_.seed, "init", p.name);
    for (int64_t i = 0; i < p.value.size(); ++i) {
      p.value[i] = static_cast<float>(rng.Uniform(-limit, limit));
    }
  }
  params_.push_back(std::move(p));
  return params_.back();
}

Model::Model(ModelConfig config) : config_(std::move(config)) {
  config_.Validate();
  const ModelConfig& c = config_;

  // Every parameter exists before any graph node takes its address.
  params_.reserve(2 * (c.conv_blocks.size() + 2 + 2 * c.suppression.size()));
  int64_t channels = c.input_channels;
  for (size_t b = 0; b < c.conv_blocks.size(); ++b) {
    const ConvBlock& block = c.conv_blocks[b];
    const std::string prefix = "conv" + std::to_string(b + 1);
    AddParameter(prefix + "/w", {block.filters, channels, block.kernel, block.kernel},
                 channels * block.kernel * block.kernel);
    AddParameter(prefix + "/b", {block.filters}, 0);
    channels = block.filters;
  }
  const int64_t flat = channels * c.FinalSide() * c.FinalSide();
  AddParameter("fc/w", {flat, c.fc_feature_dim}, flat);
  AddParameter("fc/b", {c.fc_feature_dim}, 0);
  const int64_t n_preserved = static_cast<int64_t>(c.preserved_task.num_classes());
  AddParameter("head/preserved/w", {c.fc_feature_dim, n_preserved}, c.fc_feature_dim);
  AddParameter("head/preserved/b", {n_preserved}, 0);
  for (size_t i = 0; i < c.suppression.size(); ++i) {
    const std::string prefix = "head/branch" + std::to_string(i);
    int64_t width = c.fc_feature_dim;
    if (c.head_hidden > 0) {
      AddParameter(prefix + "/hidden/w", {width, c.head_hidden}, width);
      AddParameter(prefix + "/hidden/b", {c.head_hidden}, 0);
      width = c.head_hidden;
    }
    AddParameter(prefix + "/w", {width, c.suppression[i].n_classes}, width);
    AddParameter(prefix + "/b", {c.suppression[i].n_classes}, 0);
  }

  ad::Graph& g = graph_;
  size_t next = 0;
  auto param = [&]() { return g.Param(params_.at(next++)); };

  input_ = g.Input("images");
  NodeId x = input_;
  for (size_t b = 0; b < c.conv_blocks.size(); ++b) {
    const NodeId w = param();
    const NodeId bias = param();
    x = g.MaxPool2x2(g.Relu(g.AddBias(g.Conv2d(x, w, ad::Padding::kSame), bias)));
  }
  {
    const NodeId w = param();
    const NodeId bias = param();
    features_ = g.Relu(g.AddBias(g.MatMul(g.Flatten(x), w), bias));
  }
  {
    const NodeId w = param();
    const NodeId bias = param();
    preserved_.logits = g.AddBias(g.MatMul(features_, w), bias);
    preserved_.target = g.Input("target/preserved");
    preserved_.loss = g.SoftmaxCrossEntropy(preserved_.logits, preserved_.target);
  }
  if (c.suppression.empty()) {
    objective_ = preserved_.loss;
    return;
  }
  NodeId objective = g.Scale(preserved_.loss, static_cast<float>(c.lambda));
  for (size_t i = 0; i < c.suppression.size(); ++i) {
    const SuppressionBranch& s = c.suppression[i];
    const bool reversed = s.mode != SuppressionMode::kKnownNegativeLoss;
    const float cap =
        static_cast<float>(c.loss_cap_scale * std::log(static_cast<double>(s.n_classes)));
    NodeId hidden_w{};
    NodeId hidden_b{};
    if (c.head_hidden > 0) {
      hidden_w = param();
      hidden_b = param();
    }
    const NodeId w = param();
    const NodeId bias = param();
    auto classify = [&](NodeId x) {
      if (c.head_hidden > 0) x = g.Relu(g.AddBias(g.MatMul(x, hidden_w), hidden_b));
      return g.AddBias(g.MatMul(x, w), bias);
    };
    HeadNodes head;
    head.target = g.Input("target/branch" + std::to_string(i));
    NodeId term;
    if (reversed) {
      // Two passes through the same head. The reversed pass pushes the trunk
      // only while the head is below the cap; the detached pass keeps the
      // head descending on its true loss regardless.
      const NodeId adv = g.ClampMax(
          g.SoftmaxCrossEntropy(
              classify(g.GradReverse(features_, static_cast<float>(c.BranchAlpha(i)))),
              head.target),
          cap);
      head.logits = classify(g.GradReverse(features_, 0.0f));
      head.loss = g.SoftmaxCrossEntropy(head.logits, head.target);
      term = g.Add(adv, g.Add(head.loss, g.Scale(g.ClampMax(head.loss, cap), -1.0f)));
    } else {
      head.logits = classify(features_);
      head.loss = g.ClampMax(g.SoftmaxCrossEntropy(head.logits, head.target), cap);
      term = g.Scale(head.loss, static_cast<float>(-(1.0 - c.lambda)));
    }
    branches_.push_back(head);
    objective = g.Add(objective, term);
  }
  objective_ = objective;
}

std::vector<ad::Parameter*> Model::parameter_ptrs() {
  std::vector<ad::Parameter*> out;
  for (ad::Parameter& p : params_) out.push_back(&p);
  return out;
}

ad::Parameter& Model::parameter(std::string_view name) {
  for (ad::Parameter& p : params_) {
    if (p.name == name) return p;
  }
  throw Error(ErrorCode::kInvalidConfig, "no parameter named " + std::string(name));
}

int64_t Model::ParameterCount() const {
  int64_t n = 0;
  for (const ad::Parameter& p : params_) n += p.value.size();
  return n;
}

}  // namespace overlearn::train
