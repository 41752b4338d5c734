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

#include "overlearn/ad/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "overlearn/common/error.hpp"

namespace overlearn::ad {

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw Error(ErrorCode::kShapeMismatch, "negative dimension");
    n *= d;
  }
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, float fill)
    : shape_(std::move(shape)), data_(static_cast<size_t>(NumElements(shape_)), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (static_cast<int64_t>(data_.size()) != NumElements(shape_)) {
    throw Error(ErrorCode::kShapeMismatch,
                "data length does not match shape " + ShapeString(shape_));
  }
}

void Tensor::Resize(const Shape& shape) {
  shape_ = shape;
  data_.resize(static_cast<size_t>(NumElements(shape_)));
}

void Tensor::Fill(float value) { std::fill(data_.begin(), data_.end(), value); }

void Tensor::Reshape(const Shape& shape) {
  if (NumElements(shape) != size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "cannot reshape " + ShapeString(shape_) + " to " + ShapeString(shape));
  }
  shape_ = shape;
}

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return std::isfinite(v); });
}

}  // namespace overlearn::ad
