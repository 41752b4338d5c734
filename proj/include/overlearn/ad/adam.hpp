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

#ifndef OVERLEARN_AD_ADAM_HPP_
#define OVERLEARN_AD_ADAM_HPP_

#include <cstdint>
#include <vector>

#include "overlearn/ad/graph.hpp"

namespace overlearn::ad {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First and second moment estimates, one pair per parameter, in the order the
// parameters are passed to AdamStep.
struct AdamState {
  int64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

// One bias-corrected Adam update (no amsgrad) from each parameter's grad.
// Moments are created lazily as zeros on the first call.
void AdamStep(const std::vector<Parameter*>& params, AdamState& state,
              const AdamConfig& config);

}  // namespace overlearn::ad

#endif  // OVERLEARN_AD_ADAM_HPP_
