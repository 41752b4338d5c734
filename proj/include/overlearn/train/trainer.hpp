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

#ifndef OVERLEARN_TRAIN_TRAINER_HPP_
#define OVERLEARN_TRAIN_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "overlearn/ad/adam.hpp"
#include "overlearn/common/rng.hpp"
#include "overlearn/data/task.hpp"
#include "overlearn/train/checkpoint.hpp"
#include "overlearn/train/dataset.hpp"
#include "overlearn/train/model.hpp"

namespace overlearn::train {

// I.i.d. uniform labels in [0, n_classes).
std::vector<int> RandomLabels(size_t count, int n_classes, Rng& rng);

// Stream for the random labels of one branch in one minibatch. Every
// (epoch, batch) pair gets fresh labels.
Rng RandomLabelStream(uint64_t seed, size_t branch, int epoch, size_t batch);

// Visiting order of the training rows in `epoch` (1-based).
std::vector<int64_t> EpochOrder(uint64_t seed, int epoch, int64_t rows);

struct StepStats {
  int64_t rows = 0;
  int64_t preserved_correct = 0;
  double preserved_loss = 0.0;
  std::vector<double> branch_losses;
  double objective = 0.0;
};

class Trainer {
 public:
  // `tasks` is the manifest registry the label columns of the image sets
  // follow. Images arrive raw; the trainer z-normalizes both sets with
  // statistics of `train`.
  Trainer(ModelConfig config, const std::vector<data::TaskSpec>& tasks, ImageSet train,
          ImageSet test);
  // Continues from a checkpoint; the images are normalized with its stored
  // statistics.
  Trainer(const Checkpoint& checkpoint, const std::vector<data::TaskSpec>& tasks,
          ImageSet train, ImageSet test);

  int epoch() const { return epoch_; }
  bool done() const { return epoch_ >= model_.config().epochs; }

  // Trains one more epoch and evaluates on the test set.
  EpochLog RunEpoch();
  // One optimizer update on `rows` as minibatch `batch` of `epoch`.
  StepStats Step(const std::vector<int64_t>& rows, int epoch, size_t batch);
  // Loads a minibatch and runs forward and backward without updating.
  StepStats ComputeGradients(const std::vector<int64_t>& rows, int epoch, size_t batch);

  // Preserved-head accuracy in evaluation mode.
  double Evaluate(const ImageSet& set);

  Checkpoint Snapshot() const;
  const Checkpoint& best() const { return best_; }
  // Reinstates the best snapshot of an interrupted run.
  void RestoreBest(Checkpoint best) { best_ = std::move(best); }
  const std::vector<EpochLog>& history() const { return history_; }

  Model& model() { return model_; }
  const Normalization& normalization() const { return normalization_; }
  const ImageSet& train_set() const { return train_; }
  const ImageSet& test_set() const { return test_; }

 private:
  void Bind(const std::vector<data::TaskSpec>& tasks);

  Model model_;
  Normalization normalization_;
  ImageSet train_;
  ImageSet test_;
  size_t preserved_column_ = 0;
  std::vector<int> branch_columns_;  // -1 for random labels
  ad::AdamState adam_;
  int epoch_ = 0;
  std::vector<EpochLog> history_;
  Checkpoint best_;
  ad::Tensor batch_images_;
};

std::string FormatTrainingLog(const std::vector<EpochLog>& history, size_t branches);

struct TrainOptions {
  // Continue from out_dir/last.ckpt when it exists.
  bool resume = false;
  // Stop after this many epochs in this call (0 = run to the budget).
  int max_epochs = 0;
  std::function<void(const EpochLog&)> on_epoch;
};

inline constexpr const char* kBestCheckpoint = "best.ckpt";
inline constexpr const char* kLastCheckpoint = "last.ckpt";
inline constexpr const char* kTrainingLog = "training_log.csv";

// Trains on the dataset in `data_dir` and writes best.ckpt (highest preserved
// test accuracy), last.ckpt, training_log.csv and config.json to `out_dir`.
// Returns the best checkpoint.
Checkpoint Train(const ModelConfig& config, const std::filesystem::path& data_dir,
                 const std::filesystem::path& out_dir, const TrainOptions& options = {});

}  // namespace overlearn::train

#endif  // OVERLEARN_TRAIN_TRAINER_HPP_
