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

#include "overlearn/trust/trust.hpp"

#include <algorithm>
#include <cmath>

#include "overlearn/common/error.hpp"

namespace overlearn::trust {

Matrix IdealMatrix(const std::vector<int>& class_counts) {
  const size_t n = class_counts.size();
  if (n < 2) throw Error(ErrorCode::kTooFewTasks, "trust needs at least two tasks");
  for (int c : class_counts) {
    if (c < 2) throw Error(ErrorCode::kTooFewClasses, "every task needs at least two classes");
  }
  Matrix m(n, std::vector<double>(n));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) m[i][j] = i == j ? 1.0 : 1.0 / class_counts[j];
  }
  return m;
}

Matrix IdealMatrix(const std::vector<data::TaskSpec>& tasks) {
  std::vector<int> counts;
  for (const data::TaskSpec& t : tasks) counts.push_back(static_cast<int>(t.num_classes()));
  return IdealMatrix(counts);
}

Matrix WeightMatrix(size_t n_tasks) {
  if (n_tasks < 2) throw Error(ErrorCode::kTooFewTasks, "trust needs at least two tasks");
  Matrix w(n_tasks, std::vector<double>(n_tasks, 1.0));
  for (size_t i = 0; i < n_tasks; ++i) w[i][i] = static_cast<double>(n_tasks - 1);
  return w;
}

std::string_view BandName(Band band) {
  switch (band) {
    case Band::kHigh: return "high";
    case Band::kAcceptable: return "acceptable";
    case Band::kPoor: return "poor";
  }
  return "?";
}

Band Classify(double score) {
  if (score >= 0.9) return Band::kHigh;
  if (score >= 0.8) return Band::kAcceptable;
  return Band::kPoor;
}

namespace {

void CheckSquare(const Matrix& m, size_t n, const char* what) {
  if (m.size() != n) throw Error(ErrorCode::kShapeMismatch, std::string(what) + " has wrong rows");
  for (const auto& row : m) {
    if (row.size() != n) {
      throw Error(ErrorCode::kShapeMismatch, std::string(what) + " is not square");
    }
  }
}

Band ParseBand(const std::string& name) {
  for (Band b : {Band::kHigh, Band::kAcceptable, Band::kPoor}) {
    if (BandName(b) == name) return b;
  }
  throw Error(ErrorCode::kParse, "unknown trust band '" + name + "'");
}

}  // namespace

TrustReport TrustScore(const Matrix& observed, const Matrix& ideal, const Matrix& weights,
                       std::vector<std::string> task_names, double threshold) {
  const size_t n = ideal.size();
  if (n < 2) throw Error(ErrorCode::kTooFewTasks, "trust needs at least two tasks");
  CheckSquare(ideal, n, "ideal matrix");
  CheckSquare(observed, n, "performance matrix");
  CheckSquare(weights, n, "weight matrix");
  for (const auto& row : observed) {
    for (double v : row) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::kOutOfRangeCell, "performance cell outside [0, 1]");
      }
    }
  }
  if (task_names.empty()) {
    for (size_t i = 0; i < n; ++i) task_names.push_back("task" + std::to_string(i));
  } else if (task_names.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "task names do not match the matrix");
  }

  TrustReport r;
  r.tasks = std::move(task_names);
  r.observed = observed;
  r.ideal = ideal;
  r.weights = weights;
  r.threshold = threshold;
  r.deviation.assign(n, std::vector<double>(n));
  double weighted = 0.0, total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      r.deviation[i][j] = std::abs(ideal[i][j] - observed[i][j]);
      weighted += r.deviation[i][j] * weights[i][j];
      total += weights[i][j];
      if (i != j && observed[i][j] - ideal[i][j] > threshold) {
        r.overlearning.push_back({i, j, observed[i][j], ideal[i][j]});
      }
    }
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kInvalidConfig, "weights sum to zero");
  r.score = 1.0 - weighted / total;
  r.band = Classify(r.score);
  std::stable_sort(r.overlearning.begin(), r.overlearning.end(),
                   [](const OverlearnedCell& a, const OverlearnedCell& b) {
                     return a.excess() > b.excess();
                   });
  return r;
}

TrustReport Evaluate(const probe::PerformanceMatrix& matrix, double threshold) {
  matrix.Validate();
  std::vector<std::string> names;
  for (const data::TaskSpec& t : matrix.tasks) names.push_back(t.name);
  std::vector<int> counts;
  for (const data::TaskSpec& t : matrix.tasks) counts.push_back(static_cast<int>(t.num_classes()));
  return TrustScore(matrix.cells, IdealMatrix(counts), WeightMatrix(matrix.size()),
                    std::move(names), threshold);
}

nlohmann::json TrustReport::ToJson() const {
  nlohmann::json cells = nlohmann::json::array();
  for (const OverlearnedCell& c : overlearning) {
    cells.push_back({{"preserved", tasks[c.row]},
                     {"probed", tasks[c.col]},
                     {"row", c.row},
                     {"col", c.col},
                     {"observed", c.observed},
                     {"ideal", c.ideal},
                     {"excess", c.excess()}});
  }
  return {{"format", "overlearn-trust"}, {"version", 1},
          {"tasks", tasks},              {"trust_score", score},
          {"band", BandName(band)},      {"observed", observed},
          {"ideal", ideal},              {"weights", weights},
          {"deviation", deviation},      {"overlearning_threshold", threshold},
          {"overlearning", cells}};
}

TrustReport TrustReport::FromJson(const nlohmann::json& json) {
  try {
    TrustReport r;
    r.tasks = json.at("tasks").get<std::vector<std::string>>();
    r.score = json.at("trust_score").get<double>();
    r.band = ParseBand(json.at("band").get<std::string>());
    r.observed = json.at("observed").get<Matrix>();
    r.ideal = json.at("ideal").get<Matrix>();
    r.weights = json.at("weights").get<Matrix>();
    r.deviation = json.at("deviation").get<Matrix>();
    r.threshold = json.at("overlearning_threshold").get<double>();
    for (const auto& c : json.at("overlearning")) {
      r.overlearning.push_back({c.at("row").get<size_t>(), c.at("col").get<size_t>(),
                                c.at("observed").get<double>(), c.at("ideal").get<double>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("trust report: ") + e.what());
  }
}

TrustDelta Delta(const TrustReport& before, const TrustReport& after) {
  if (before.tasks != after.tasks || before.weights != after.weights ||
      before.ideal != after.ideal) {
    throw Error(ErrorCode::kRegistryMismatch, "trust reports cover different task registries");
  }
  const size_t n = before.tasks.size();
  double total = 0.0;
  for (const auto& row : before.weights) {
    for (double w : row) total += w;
  }
  TrustDelta d;
  d.delta = after.score - before.score;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      const double c =
          before.weights[i][j] * (before.deviation[i][j] - after.deviation[i][j]) / total;
      d.cells.push_back({i, j, c});
    }
  }
  std::stable_sort(d.cells.begin(), d.cells.end(),
                   [](const CellContribution& a, const CellContribution& b) {
                     return std::abs(a.contribution) > std::abs(b.contribution);
                   });
  return d;
}

nlohmann::json TrustDelta::ToJson(const std::vector<std::string>& tasks) const {
  nlohmann::json list = nlohmann::json::array();
  for (const CellContribution& c : cells) {
    list.push_back({{"preserved", tasks.at(c.row)},
                    {"probed", tasks.at(c.col)},
                    {"contribution", c.contribution}});
  }
  return {{"delta", delta}, {"cells", list}};
}

}  // namespace overlearn::trust
