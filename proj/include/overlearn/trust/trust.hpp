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

#ifndef OVERLEARN_TRUST_TRUST_HPP_
#define OVERLEARN_TRUST_TRUST_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "overlearn/data/task.hpp"
#include "overlearn/probe/matrix.hpp"

namespace overlearn::trust {

using Matrix = std::vector<std::vector<double>>;

// M[i][i] = 1 and M[i][j] = 1/n_j: a model that solves its own task and
// carries no information about any other.
Matrix IdealMatrix(const std::vector<int>& class_counts);
Matrix IdealMatrix(const std::vector<data::TaskSpec>& tasks);

// n_t - 1 on the diagonal, 1 elsewhere, so diagonal and off-diagonal cells
// carry equal total weight.
Matrix WeightMatrix(size_t n_tasks);

enum class Band { kHigh, kAcceptable, kPoor };
std::string_view BandName(Band band);
// >= 0.9 high, >= 0.8 acceptable, otherwise poor.
Band Classify(double score);

inline constexpr double kDefaultOverlearningThreshold = 0.1;

struct OverlearnedCell {
  size_t row = 0;
  size_t col = 0;
  double observed = 0.0;
  double ideal = 0.0;

  double excess() const { return observed - ideal; }
  bool operator==(const OverlearnedCell&) const = default;
};

struct TrustReport {
  std::vector<std::string> tasks;
  double score = 0.0;
  Band band = Band::kPoor;
  Matrix observed;
  Matrix ideal;
  Matrix weights;
  Matrix deviation;  // |M - T|
  double threshold = kDefaultOverlearningThreshold;
  // Off-diagonal cells where T - M exceeds the threshold, largest first.
  std::vector<OverlearnedCell> overlearning;

  nlohmann::json ToJson() const;
  static TrustReport FromJson(const nlohmann::json& json);
  bool operator==(const TrustReport&) const = default;
};

// score = 1 - sum(|M - T| * W) / sum(W). Throws shape-mismatch if the
// matrices disagree in shape and out-of-range-cell for T outside [0, 1].
TrustReport TrustScore(const Matrix& observed, const Matrix& ideal, const Matrix& weights,
                       std::vector<std::string> task_names = {},
                       double threshold = kDefaultOverlearningThreshold);

TrustReport Evaluate(const probe::PerformanceMatrix& matrix,
                     double threshold = kDefaultOverlearningThreshold);

struct CellContribution {
  size_t row = 0;
  size_t col = 0;
  double contribution = 0.0;  // share of the score change from this cell
};

struct TrustDelta {
  double delta = 0.0;  // after.score - before.score
  std::vector<CellContribution> cells;  // by |contribution|, largest first

  nlohmann::json ToJson(const std::vector<std::string>& tasks) const;
};

// Throws registry-mismatch unless both reports cover the same tasks.
TrustDelta Delta(const TrustReport& before, const TrustReport& after);

}  // namespace overlearn::trust

#endif  // OVERLEARN_TRUST_TRUST_HPP_
