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

#ifndef OVERLEARN_PROBE_PROBE_HPP_
#define OVERLEARN_PROBE_PROBE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "overlearn/train/features.hpp"

namespace overlearn::probe {

// Fixed probe: Dense(512) relu Dropout(0.5) Dense(100) relu Dropout(0.3)
// Dense(n), trained with Adam and early stopping on validation loss.
struct ProbeConfig {
  std::vector<int> hidden = {512, 100};
  std::vector<double> dropout = {0.5, 0.3};
  double lr = 1e-4;
  int batch_size = 32;
  int max_epochs = 100;
  int patience = 10;
  double val_fraction = 0.2;
  uint64_t seed = 0;

  void Validate() const;
  nlohmann::json ToJson() const;
  static ProbeConfig FromJson(const nlohmann::json& json);
};

// Row-major feature matrix with one class label per row.
struct ProbeData {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<float> x;
  std::vector<int> y;
};

struct ProbeResult {
  double test_accuracy = 0.0;
  // Frequency of the most common test label: the accuracy of always
  // guessing it.
  double chance = 0.0;
  int n_classes = 0;
  int epochs_run = 0;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  int64_t train_rows = 0;
  int64_t val_rows = 0;
  int64_t test_rows = 0;

  nlohmann::json ToJson() const;
};

// Holds out val_fraction of `train` for early stopping, z-normalizes each
// feature with the remaining rows' statistics, and reports accuracy on
// `test`. Throws degenerate-labels if the training labels have one class.
ProbeResult TrainProbe(const ProbeData& train, const ProbeData& test, int n_classes,
                       const ProbeConfig& config);

ProbeData SliceTask(const train::FeatureTable& table, const std::string& task);

// Probes `task` with train-split features for fitting and test-split
// features for scoring.
ProbeResult ProbeTask(const train::FeatureTable& train, const train::FeatureTable& test,
                      const std::string& task, const ProbeConfig& config);

}  // namespace overlearn::probe

#endif  // OVERLEARN_PROBE_PROBE_HPP_
