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

#include "overlearn/ad/graph.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

#include "overlearn/common/error.hpp"

namespace overlearn::ad {

namespace {

using MatrixMap =
    Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatrixMap = Eigen::Map<
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

[[noreturn]] void ShapeFail(const std::string& what) {
  throw Error(ErrorCode::kShapeMismatch, what);
}

struct ConvGeometry {
  int64_t n, c, h, w, f, k, pad, ho, wo;
  int64_t rows() const { return c * k * k; }
  int64_t cols() const { return ho * wo; }
};

ConvGeometry ConvShape(const Tensor& x, const Tensor& weight, Padding padding) {
  if (x.rank() != 4 || weight.rank() != 4) ShapeFail("conv2d expects rank-4 input and weight");
  ConvGeometry g{};
  g.n = x.dim(0);
  g.c = x.dim(1);
  g.h = x.dim(2);
  g.w = x.dim(3);
  g.f = weight.dim(0);
  g.k = weight.dim(2);
  if (weight.dim(1) != g.c || weight.dim(3) != g.k) {
    ShapeFail("conv2d weight " + ShapeString(weight.shape()) +
              " does not match input " + ShapeString(x.shape()));
  }
  if (padding == Padding::kSame) {
    if (g.k % 2 == 0) ShapeFail("same padding needs an odd kernel");
    g.pad = (g.k - 1) / 2;
  }
  g.ho = g.h + 2 * g.pad - g.k + 1;
  g.wo = g.w + 2 * g.pad - g.k + 1;
  if (g.ho <= 0 || g.wo <= 0) ShapeFail("conv2d kernel larger than input");
  return g;
}

// col[(c*K + ki)*K + kj][oy*Wo + ox] = x[c][oy+ki-pad][ox+kj-pad] (0 outside).
void Im2Col(const float* x, const ConvGeometry& g, float* col) {
  for (int64_t c = 0; c < g.c; ++c) {
    for (int64_t ki = 0; ki < g.k; ++ki) {
      for (int64_t kj = 0; kj < g.k; ++kj) {
        float* row = col + ((c * g.k + ki) * g.k + kj) * g.cols();
        const int64_t ox_lo = std::max<int64_t>(0, g.pad - kj);
        const int64_t ox_hi = std::min<int64_t>(g.wo, g.w + g.pad - kj);
        for (int64_t oy = 0; oy < g.ho; ++oy) {
          float* out = row + oy * g.wo;
          const int64_t iy = oy + ki - g.pad;
          if (iy < 0 || iy >= g.h || ox_lo >= ox_hi) {
            std::fill(out, out + g.wo, 0.0f);
            continue;
          }
          const float* in = x + (c * g.h + iy) * g.w + (kj - g.pad);
          std::fill(out, out + ox_lo, 0.0f);
          std::copy(in + ox_lo, in + ox_hi, out + ox_lo);
          std::fill(out + ox_hi, out + g.wo, 0.0f);
        }
      }
    }
  }
}

// Adjoint of Im2Col: scatter-adds columns back into dx.
void Col2ImAdd(const float* col, const ConvGeometry& g, float* dx) {
  for (int64_t c = 0; c < g.c; ++c) {
    for (int64_t ki = 0; ki < g.k; ++ki) {
      for (int64_t kj = 0; kj < g.k; ++kj) {
        const float* row = col + ((c * g.k + ki) * g.k + kj) * g.cols();
        const int64_t ox_lo = std::max<int64_t>(0, g.pad - kj);
        const int64_t ox_hi = std::min<int64_t>(g.wo, g.w + g.pad - kj);
        for (int64_t oy = 0; oy < g.ho; ++oy) {
          const int64_t iy = oy + ki - g.pad;
          if (iy < 0 || iy >= g.h) continue;
          const float* in = row + oy * g.wo;
          float* out = dx + (c * g.h + iy) * g.w + (kj - g.pad);
          for (int64_t ox = ox_lo; ox < ox_hi; ++ox) out[ox] += in[ox];
        }
      }
    }
  }
}

}  // namespace

const char* OpName(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kParameter: return "parameter";
    case Op::kMatMul: return "matmul";
    case Op::kAddBias: return "add_bias";
    case Op::kConv2d: return "conv2d";
    case Op::kMaxPool2x2: return "max_pool2x2";
    case Op::kRelu: return "relu";
    case Op::kFlatten: return "flatten";
    case Op::kDropout: return "dropout";
    case Op::kSoftmaxCrossEntropy: return "softmax_cross_entropy";
    case Op::kGradReverse: return "grad_reverse";
    case Op::kScale: return "scale";
    case Op::kAdd: return "add";
    case Op::kClampMax: return "clamp_max";
  }
  return "?";
}

NodeId Graph::Append(Op op, std::vector<NodeId> inputs, float attr) {
  Node node;
  node.op = op;
  node.attr = attr;
  for (NodeId in : inputs) {
    if (in.index < 0 || in.index >= static_cast<int32_t>(nodes_.size())) {
      throw Error(ErrorCode::kInvalidConfig, "dangling node reference");
    }
    node.requires_grad = node.requires_grad || nodes_[in.index].requires_grad;
  }
  node.inputs = std::move(inputs);
  nodes_.push_back(std::move(node));
  return NodeId{static_cast<int32_t>(nodes_.size() - 1)};
}

NodeId Graph::Input(std::string name, bool requires_grad) {
  NodeId id = Append(Op::kInput, {});
  nodes_[id.index].name = std::move(name);
  nodes_[id.index].requires_grad = requires_grad;
  return id;
}

NodeId Graph::Param(Parameter& parameter) {
  NodeId id = Append(Op::kParameter, {});
  Node& node = nodes_[id.index];
  node.name = parameter.name;
  node.param = &parameter;
  node.requires_grad = true;
  return id;
}

NodeId Graph::MatMul(NodeId a, NodeId b) { return Append(Op::kMatMul, {a, b}); }
NodeId Graph::AddBias(NodeId x, NodeId bias) { return Append(Op::kAddBias, {x, bias}); }
NodeId Graph::Conv2d(NodeId x, NodeId weight, Padding padding) {
  NodeId id = Append(Op::kConv2d, {x, weight});
  nodes_[id.index].padding = padding;
  return id;
}
NodeId Graph::MaxPool2x2(NodeId x) { return Append(Op::kMaxPool2x2, {x}); }
NodeId Graph::Relu(NodeId x) { return Append(Op::kRelu, {x}); }
NodeId Graph::Flatten(NodeId x) { return Append(Op::kFlatten, {x}); }
NodeId Graph::Dropout(NodeId x, float p) {
  if (!(p >= 0.0f && p < 1.0f)) {
    throw Error(ErrorCode::kInvalidConfig, "dropout probability must lie in [0, 1)");
  }
  return Append(Op::kDropout, {x}, p);
}
NodeId Graph::SoftmaxCrossEntropy(NodeId logits, NodeId target) {
  NodeId id = Append(Op::kSoftmaxCrossEntropy, {logits, target});
  // Targets are data, never differentiated.
  nodes_[id.index].requires_grad = nodes_[logits.index].requires_grad;
  return id;
}
NodeId Graph::GradReverse(NodeId x, float alpha) {
  if (!(alpha >= 0.0f)) {
    throw Error(ErrorCode::kInvalidConfig, "gradient reversal scale must be >= 0");
  }
  return Append(Op::kGradReverse, {x}, alpha);
}
NodeId Graph::Scale(NodeId x, float factor) { return Append(Op::kScale, {x}, factor); }
NodeId Graph::Add(NodeId a, NodeId b) { return Append(Op::kAdd, {a, b}); }
NodeId Graph::ClampMax(NodeId x, float limit) { return Append(Op::kClampMax, {x}, limit); }

void Graph::SetInput(NodeId input, Tensor value) {
  Node& node = nodes_.at(input.index);
  if (node.op != Op::kInput) throw Error(ErrorCode::kInvalidConfig, "not an input node");
  node.value = std::move(value);
}

Tensor& Graph::MutableInput(NodeId input) {
  Node& node = nodes_.at(input.index);
  if (node.op != Op::kInput) throw Error(ErrorCode::kInvalidConfig, "not an input node");
  return node.value;
}

const Tensor& Graph::Value(NodeId id) const {
  const Node& node = nodes_.at(id.index);
  return node.param ? node.param->value : node.value;
}

const Tensor& Graph::Grad(NodeId id) const {
  const Node& node = nodes_.at(id.index);
  return node.param ? node.param->grad : node.grad;
}

Tensor& Graph::ValueRef(NodeId id) {
  Node& node = nodes_[id.index];
  return node.param ? node.param->value : node.value;
}

Tensor& Graph::GradRef(NodeId id) {
  Node& node = nodes_[id.index];
  return node.param ? node.param->grad : node.grad;
}

std::vector<Parameter*> Graph::Parameters() const {
  std::vector<Parameter*> out;
  for (const Node& node : nodes_) {
    if (node.param && std::find(out.begin(), out.end(), node.param) == out.end()) {
      out.push_back(node.param);
    }
  }
  return out;
}

void Graph::Forward() {
  if (nodes_.empty()) return;
  Forward(NodeId{static_cast<int32_t>(nodes_.size() - 1)});
}

void Graph::Forward(NodeId until) {
  if (until.index < 0 || until.index >= static_cast<int32_t>(nodes_.size())) {
    throw Error(ErrorCode::kInvalidConfig, "node does not belong to this graph");
  }
  if (training_ && !rng_) rng_.emplace(0);
  for (int32_t i = 0; i <= until.index; ++i) ForwardNode(nodes_[i]);
}

void Graph::ForwardNode(Node& node) {
  Tensor& out = node.value;
  switch (node.op) {
    case Op::kInput:
    case Op::kParameter:
      return;

    case Op::kMatMul: {
      const Tensor& a = ValueRef(node.inputs[0]);
      const Tensor& b = ValueRef(node.inputs[1]);
      if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        ShapeFail("matmul " + ShapeString(a.shape()) + " x " + ShapeString(b.shape()));
      }
      out.Resize({a.dim(0), b.dim(1)});
      MatrixMap(out.data(), a.dim(0), b.dim(1)).noalias() =
          ConstMatrixMap(a.data(), a.dim(0), a.dim(1)) *
          ConstMatrixMap(b.data(), b.dim(0), b.dim(1));
      return;
    }

    case Op::kAddBias: {
      const Tensor& x = ValueRef(node.inputs[0]);
      const Tensor& b = ValueRef(node.inputs[1]);
      if (b.rank() != 1) ShapeFail("bias must be rank 1");
      out.Resize(x.shape());
      if (x.rank() == 2 && x.dim(1) == b.dim(0)) {
        const int64_t n = x.dim(0), m = x.dim(1);
        for (int64_t i = 0; i < n; ++i) {
          for (int64_t j = 0; j < m; ++j) out[i * m + j] = x[i * m + j] + b[j];
        }
      } else if (x.rank() == 4 && x.dim(1) == b.dim(0)) {
        const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
        for (int64_t i = 0; i < n; ++i) {
          for (int64_t ch = 0; ch < c; ++ch) {
            const int64_t base = (i * c + ch) * hw;
            for (int64_t p = 0; p < hw; ++p) out[base + p] = x[base + p] + b[ch];
          }
        }
      } else {
        ShapeFail("add_bias " + ShapeString(x.shape()) + " + " + ShapeString(b.shape()));
      }
      return;
    }

    case Op::kConv2d: {
      const Tensor& x = ValueRef(node.inputs[0]);
      const Tensor& w = ValueRef(node.inputs[1]);
      const ConvGeometry g = ConvShape(x, w, node.padding);
      out.Resize({g.n, g.f, g.ho, g.wo});
      node.scratch.resize(static_cast<size_t>(g.n * g.rows() * g.cols()));
      ConstMatrixMap wm(w.data(), g.f, g.rows());
      for (int64_t i = 0; i < g.n; ++i) {
        float* col = node.scratch.data() + i * g.rows() * g.cols();
        Im2Col(x.data() + i * g.c * g.h * g.w, g, col);
        MatrixMap(out.data() + i * g.f * g.cols(), g.f, g.cols()).noalias() =
            wm * ConstMatrixMap(col, g.rows(), g.cols());
      }
      return;
    }

    case Op::kMaxPool2x2: {
      const Tensor& x = ValueRef(node.inputs[0]);
      if (x.rank() != 4) ShapeFail("max_pool2x2 expects rank 4");
      const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
      const int64_t ho = h / 2, wo = w / 2;
      if (ho == 0 || wo == 0) ShapeFail("max_pool2x2 input too small");
      out.Resize({n, c, ho, wo});
      node.indices.resize(static_cast<size_t>(out.size()));
      int64_t o = 0;
      for (int64_t plane = 0; plane < n * c; ++plane) {
        const int64_t base = plane * h * w;
        for (int64_t oy = 0; oy < ho; ++oy) {
          for (int64_t ox = 0; ox < wo; ++ox, ++o) {
            int64_t best = base + (2 * oy) * w + 2 * ox;
            for (int64_t dy = 0; dy < 2; ++dy) {
              for (int64_t dx = 0; dx < 2; ++dx) {
                const int64_t idx = base + (2 * oy + dy) * w + 2 * ox + dx;
                if (x[idx] > x[best]) best = idx;
              }
            }
            out[o] = x[best];
            node.indices[o] = static_cast<int32_t>(best);
          }
        }
      }
      return;
    }

    case Op::kRelu: {
      const Tensor& x = ValueRef(node.inputs[0]);
      out.Resize(x.shape());
      for (int64_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
      return;
    }

    case Op::kFlatten: {
      const Tensor& x = ValueRef(node.inputs[0]);
      if (x.rank() < 1) ShapeFail("flatten needs a batch dimension");
      const int64_t n = x.dim(0);
      out.Resize({n, n ? x.size() / n : 0});
      std::copy(x.data(), x.data() + x.size(), out.data());
      return;
    }

    case Op::kDropout: {
      const Tensor& x = ValueRef(node.inputs[0]);
      out.Resize(x.shape());
      const float p = node.attr;
      if (!training_ || p == 0.0f) {
        std::copy(x.data(), x.data() + x.size(), out.data());
        node.scratch.assign(static_cast<size_t>(x.size()), 1.0f);
        return;
      }
      const float keep_scale = 1.0f / (1.0f - p);
      node.scratch.resize(static_cast<size_t>(x.size()));
      for (int64_t i = 0; i < x.size(); ++i) {
        const float m = rng_->Uniform() < p ? 0.0f : keep_scale;
        node.scratch[i] = m;
        out[i] = x[i] * m;
      }
      return;
    }

    case Op::kSoftmaxCrossEntropy: {
      const Tensor& logits = ValueRef(node.inputs[0]);
      const Tensor& target = ValueRef(node.inputs[1]);
      if (logits.rank() != 2) ShapeFail("cross-entropy logits must be [N,C]");
      const int64_t n = logits.dim(0), c = logits.dim(1);
      const bool indices = target.rank() == 1;
      if (indices ? target.dim(0) != n
                  : (target.rank() != 2 || target.shape() != logits.shape())) {
        ShapeFail("cross-entropy target " + ShapeString(target.shape()) +
                  " vs logits " + ShapeString(logits.shape()));
      }
      if (n == 0) ShapeFail("cross-entropy over an empty batch");
      node.scratch.resize(static_cast<size_t>(n * c));
      double total = 0.0;
      for (int64_t i = 0; i < n; ++i) {
        const float* z = logits.data() + i * c;
        double zmax = z[0];
        for (int64_t j = 1; j < c; ++j) zmax = std::max<double>(zmax, z[j]);
        double sum = 0.0;
        for (int64_t j = 0; j < c; ++j) sum += std::exp(z[j] - zmax);
        const double lse = zmax + std::log(sum);
        for (int64_t j = 0; j < c; ++j) {
          node.scratch[i * c + j] = static_cast<float>(std::exp(z[j] - lse));
        }
        if (indices) {
          const float label = target[i];
          const int64_t k = static_cast<int64_t>(label);
          if (static_cast<float>(k) != label || k < 0 || k >= c) {
            ShapeFail("class index out of range");
          }
          total += lse - z[k];
        } else {
          const float* t = target.data() + i * c;
          for (int64_t j = 0; j < c; ++j) total += t[j] * (lse - z[j]);
        }
      }
      out.Resize({});
      out[0] = static_cast<float>(total / static_cast<double>(n));
      return;
    }

    case Op::kGradReverse:
    case Op::kScale: {
      const Tensor& x = ValueRef(node.inputs[0]);
      out.Resize(x.shape());
      if (node.op == Op::kGradReverse) {
        std::copy(x.data(), x.data() + x.size(), out.data());
      } else {
        for (int64_t i = 0; i < x.size(); ++i) out[i] = node.attr * x[i];
      }
      return;
    }

    case Op::kAdd: {
      const Tensor& a = ValueRef(node.inputs[0]);
      const Tensor& b = ValueRef(node.inputs[1]);
      if (a.shape() != b.shape()) {
        ShapeFail("add " + ShapeString(a.shape()) + " + " + ShapeString(b.shape()));
      }
      out.Resize(a.shape());
      for (int64_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
      return;
    }

    case Op::kClampMax: {
      const Tensor& x = ValueRef(node.inputs[0]);
      out.Resize(x.shape());
      for (int64_t i = 0; i < x.size(); ++i) out[i] = std::min(x[i], node.attr);
      return;
    }
  }
}

void Graph::Backward(NodeId loss) {
  if (loss.index < 0 || loss.index >= static_cast<int32_t>(nodes_.size())) {
    throw Error(ErrorCode::kInvalidConfig, "loss node does not belong to this graph");
  }
  if (Value(loss).size() != 1) {
    throw Error(ErrorCode::kNotScalarLoss,
                "loss has shape " + ShapeString(Value(loss).shape()));
  }
  for (Node& node : nodes_) {
    Tensor& value = node.param ? node.param->value : node.value;
    Tensor& grad = node.param ? node.param->grad : node.grad;
    grad.Resize(value.shape());
    grad.Fill(0.0f);
  }
  GradRef(loss)[0] = 1.0f;
  for (int32_t i = loss.index; i >= 0; --i) {
    Node& node = nodes_[i];
    if (node.requires_grad) BackwardNode(node);
  }
}

void Graph::BackwardNode(Node& node) {
  const Tensor& g = node.grad;
  auto wants = [&](size_t k) { return nodes_[node.inputs[k].index].requires_grad; };

  switch (node.op) {
    case Op::kInput:
    case Op::kParameter:
      return;

    case Op::kMatMul: {
      const Tensor& a = ValueRef(node.inputs[0]);
      const Tensor& b = ValueRef(node.inputs[1]);
      const int64_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
      ConstMatrixMap gm(g.data(), n, m);
      if (wants(0)) {
        MatrixMap(GradRef(node.inputs[0]).data(), n, k).noalias() +=
            gm * ConstMatrixMap(b.data(), k, m).transpose();
      }
      if (wants(1)) {
        MatrixMap(GradRef(node.inputs[1]).data(), k, m).noalias() +=
            ConstMatrixMap(a.data(), n, k).transpose() * gm;
      }
      return;
    }

    case Op::kAddBias: {
      const Tensor& x = ValueRef(node.inputs[0]);
      if (wants(0)) {
        Tensor& dx = GradRef(node.inputs[0]);
        for (int64_t i = 0; i < g.size(); ++i) dx[i] += g[i];
      }
      if (wants(1)) {
        Tensor& db = GradRef(node.inputs[1]);
        const int64_t channels = db.size();
        std::vector<double> acc(static_cast<size_t>(channels), 0.0);
        if (x.rank() == 2) {
          for (int64_t i = 0; i < x.dim(0); ++i) {
            for (int64_t j = 0; j < channels; ++j) acc[j] += g[i * channels + j];
          }
        } else {
          const int64_t hw = x.dim(2) * x.dim(3);
          for (int64_t i = 0; i < x.dim(0); ++i) {
            for (int64_t ch = 0; ch < channels; ++ch) {
              const int64_t base = (i * channels + ch) * hw;
              double s = 0.0;
              for (int64_t p = 0; p < hw; ++p) s += g[base + p];
              acc[ch] += s;
            }
          }
        }
        for (int64_t j = 0; j < channels; ++j) db[j] += static_cast<float>(acc[j]);
      }
      return;
    }

    case Op::kConv2d: {
      const Tensor& x = ValueRef(node.inputs[0]);
      const Tensor& w = ValueRef(node.inputs[1]);
      const ConvGeometry geo = ConvShape(x, w, node.padding);
      const int64_t plane = geo.rows() * geo.cols();
      if (wants(1)) {
        MatrixMap dw(GradRef(node.inputs[1]).data(), geo.f, geo.rows());
        for (int64_t i = 0; i < geo.n; ++i) {
          dw.noalias() +=
              ConstMatrixMap(g.data() + i * geo.f * geo.cols(), geo.f, geo.cols()) *
              ConstMatrixMap(node.scratch.data() + i * plane, geo.rows(), geo.cols())
                  .transpose();
        }
      }
      if (wants(0)) {
        Tensor& dx = GradRef(node.inputs[0]);
        std::vector<float> dcol(static_cast<size_t>(plane));
        ConstMatrixMap wm(w.data(), geo.f, geo.rows());
        for (int64_t i = 0; i < geo.n; ++i) {
          MatrixMap(dcol.data(), geo.rows(), geo.cols()).noalias() =
              wm.transpose() *
              ConstMatrixMap(g.data() + i * geo.f * geo.cols(), geo.f, geo.cols());
          Col2ImAdd(dcol.data(), geo, dx.data() + i * geo.c * geo.h * geo.w);
        }
      }
      return;
    }

    case Op::kMaxPool2x2: {
      if (!wants(0)) return;
      Tensor& dx = GradRef(node.inputs[0]);
      for (int64_t o = 0; o < g.size(); ++o) dx[node.indices[o]] += g[o];
      return;
    }

    case Op::kRelu: {
      if (!wants(0)) return;
      const Tensor& x = ValueRef(node.inputs[0]);
      Tensor& dx = GradRef(node.inputs[0]);
      for (int64_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0f) dx[i] += g[i];
      }
      return;
    }

    case Op::kFlatten: {
      if (!wants(0)) return;
      Tensor& dx = GradRef(node.inputs[0]);
      for (int64_t i = 0; i < g.size(); ++i) dx[i] += g[i];
      return;
    }

    case Op::kDropout: {
      if (!wants(0)) return;
      Tensor& dx = GradRef(node.inputs[0]);
      for (int64_t i = 0; i < g.size(); ++i) dx[i] += g[i] * node.scratch[i];
      return;
    }

    case Op::kSoftmaxCrossEntropy: {
      if (!wants(0)) return;
      const Tensor& logits = ValueRef(node.inputs[0]);
      const Tensor& target = ValueRef(node.inputs[1]);
      Tensor& dz = GradRef(node.inputs[0]);
      const int64_t n = logits.dim(0), c = logits.dim(1);
      const double upstream = g[0] / static_cast<double>(n);
      for (int64_t i = 0; i < n; ++i) {
        if (target.rank() == 1) {
          const int64_t k = static_cast<int64_t>(target[i]);
          for (int64_t j = 0; j < c; ++j) {
            const double p = node.scratch[i * c + j];
            dz[i * c + j] += static_cast<float>(upstream * (p - (j == k ? 1.0 : 0.0)));
          }
        } else {
          const float* t = target.data() + i * c;
          double mass = 0.0;
          for (int64_t j = 0; j < c; ++j) mass += t[j];
          for (int64_t j = 0; j < c; ++j) {
            const double p = node.scratch[i * c + j];
            dz[i * c + j] += static_cast<float>(upstream * (p * mass - t[j]));
          }
        }
      }
      return;
    }

    case Op::kGradReverse: {
      if (!wants(0)) return;
      Tensor& dx = GradRef(node.inputs[0]);
      const float factor = -node.attr;
      for (int64_t i = 0; i < g.size(); ++i) dx[i] += factor * g[i];
      return;
    }

    case Op::kScale: {
      if (!wants(0)) return;
      Tensor& dx = GradRef(node.inputs[0]);
      for (int64_t i = 0; i < g.size(); ++i) dx[i] += node.attr * g[i];
      return;
    }

    case Op::kAdd: {
      for (size_t k = 0; k < 2; ++k) {
        if (!wants(k)) continue;
        Tensor& d = GradRef(node.inputs[k]);
        for (int64_t i = 0; i < g.size(); ++i) d[i] += g[i];
      }
      return;
    }

    case Op::kClampMax: {
      if (!wants(0)) return;
      const Tensor& x = ValueRef(node.inputs[0]);
      Tensor& dx = GradRef(node.inputs[0]);
      for (int64_t i = 0; i < x.size(); ++i) {
        if (x[i] < node.attr) dx[i] += g[i];
      }
      return;
    }
  }
}

}  // namespace overlearn::ad
