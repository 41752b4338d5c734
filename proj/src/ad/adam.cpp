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

#include "overlearn/ad/adam.hpp"

#include <cmath>

#include "overlearn/common/error.hpp"

namespace overlearn::ad {

void AdamStep(const std::vector<Parameter*>& params, AdamState& state,
              const AdamConfig& config) {
  if (state.m.empty() && state.v.empty()) {
    for (const Parameter* p : params) {
      state.m.emplace_back(p->value.shape());
      state.v.emplace_back(p->value.shape());
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "optimizer state does not match parameter list");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  const double b1 = config.beta1;
  const double b2 = config.beta2;

  for (size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    if (p.grad.shape() != p.value.shape() || m.shape() != p.value.shape()) {
      throw Error(ErrorCode::kShapeMismatch, "gradient shape differs for " + p.name);
    }
    for (int64_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      const double mi = b1 * m[i] + (1.0 - b1) * g;
      const double vi = b2 * v[i] + (1.0 - b2) * g * g;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double step = config.lr * (mi / c1) / (std::sqrt(vi / c2) + config.eps);
      p.value[i] = static_cast<float>(p.value[i] - step);
    }
  }
}

}  // namespace overlearn::ad
