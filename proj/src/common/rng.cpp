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

#include "overlearn/common/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "overlearn/common/error.hpp"

namespace overlearn {

uint64_t Rng::Below(uint64_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidConfig, "Rng::Below(0)");
  // Lemire-style rejection on the top of the range.
  const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                         std::numeric_limits<uint64_t>::max() % n;
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::Normal() {
  double u1 = Uniform();
  while (u1 <= 0.0) u1 = Uniform();
  const double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string Rng::SaveState() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::LoadState(const std::string& state) {
  std::istringstream is(state);
  is >> engine_;
  if (!is) throw Error(ErrorCode::kParse, "bad RNG state");
}

}  // namespace overlearn
