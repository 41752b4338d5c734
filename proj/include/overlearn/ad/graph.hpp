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

#ifndef OVERLEARN_AD_GRAPH_HPP_
#define OVERLEARN_AD_GRAPH_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "overlearn/ad/tensor.hpp"
#include "overlearn/common/rng.hpp"

namespace overlearn::ad {

// A trainable tensor owned outside the graph. Backward() overwrites `grad`.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

struct NodeId {
  int32_t index = -1;

  bool valid() const { return index >= 0; }
  bool operator==(const NodeId&) const = default;
};

enum class Padding { kValid, kSame };

enum class Op {
  kInput,
  kParameter,
  kMatMul,
  kAddBias,
  kConv2d,
  kMaxPool2x2,
  kRelu,
  kFlatten,
  kDropout,
  kSoftmaxCrossEntropy,
  kGradReverse,
  kScale,
  kAdd,
  kClampMax,
};

const char* OpName(Op op);

// Static computation graph with reverse-mode differentiation.
//
// Nodes are appended in construction order, which is also a topological
// order: Forward() evaluates them front to back and Backward() walks them
// back to front. Shapes are re-derived on every Forward(), so the batch
// dimension may change between calls. A graph is not thread-safe; separate
// graphs may run on separate threads.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  // Leaves.
  NodeId Input(std::string name, bool requires_grad = false);
  NodeId Param(Parameter& parameter);

  // a:[N,K] x b:[K,M] -> [N,M]
  NodeId MatMul(NodeId a, NodeId b);
  // x:[N,M] + b:[M], or x:[N,C,H,W] + b:[C] broadcast over channels.
  NodeId AddBias(NodeId x, NodeId bias);
  // x:[N,C,H,W] (*) w:[F,C,K,K], stride 1 -> [N,F,H',W'].
  NodeId Conv2d(NodeId x, NodeId weight, Padding padding);
  // 2x2 window, stride 2; odd trailing rows/columns are dropped.
  NodeId MaxPool2x2(NodeId x);
  NodeId Relu(NodeId x);
  // [N, ...] -> [N, prod(...)]
  NodeId Flatten(NodeId x);
  // Inverted dropout: training zeroes with probability p and scales the
  // survivors by 1/(1-p); evaluation is the identity.
  NodeId Dropout(NodeId x, float p);
  // Mean over the batch of -sum_c target_c * log softmax(logits)_c.
  // `target` is [N] class indices or [N,C] class probabilities.
  NodeId SoftmaxCrossEntropy(NodeId logits, NodeId target);
  // Identity forward; backward multiplies the incoming gradient by -alpha.
  NodeId GradReverse(NodeId x, float alpha);
  NodeId Scale(NodeId x, float factor);
  NodeId Add(NodeId a, NodeId b);
  // min(x, limit); gradient is zero where the limit is active.
  NodeId ClampMax(NodeId x, float limit);

  void SetInput(NodeId input, Tensor value);
  Tensor& MutableInput(NodeId input);

  void SetTraining(bool training) { training_ = training; }
  bool training() const { return training_; }
  // Stream feeding dropout masks; reseed per minibatch for reproducibility.
  void SetRng(Rng rng) { rng_ = std::move(rng); }

  void Forward();
  // Evaluates nodes up to and including `until` only.
  void Forward(NodeId until);
  // Fills gradients of every node reachable backwards from `loss`; all other
  // gradients are zero. Parameter gradients are overwritten, not summed.
  void Backward(NodeId loss);

  const Tensor& Value(NodeId id) const;
  const Tensor& Grad(NodeId id) const;
  Op OpOf(NodeId id) const { return nodes_.at(id.index).op; }
  size_t size() const { return nodes_.size(); }

  // Distinct parameters in the order they were attached.
  std::vector<Parameter*> Parameters() const;

 private:
  struct Node {
    Op op;
    std::vector<NodeId> inputs;
    std::string name;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    float attr = 0.0f;
    Padding padding = Padding::kValid;
    std::vector<float> scratch;
    std::vector<int32_t> indices;
  };

  NodeId Append(Op op, std::vector<NodeId> inputs, float attr = 0.0f);
  Tensor& ValueRef(NodeId id);
  Tensor& GradRef(NodeId id);
  void ForwardNode(Node& node);
  void BackwardNode(Node& node);

  std::vector<Node> nodes_;
  bool training_ = false;
  std::optional<Rng> rng_;
};

}  // namespace overlearn::ad

#endif  // OVERLEARN_AD_GRAPH_HPP_
