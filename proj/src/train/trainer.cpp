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

#include "overlearn/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>

#include "overlearn/common/error.hpp"
#include "overlearn/common/io.hpp"

namespace overlearn::train {

namespace fs = std::filesystem;

namespace {

constexpr int64_t kEvalBatch = 128;

int64_t ArgMax(const float* row, int64_t n) {
  return std::max_element(row, row + n) - row;
}

size_t FindTask(const std::vector<data::TaskSpec>& tasks, const std::string& name) {
  for (size_t t = 0; t < tasks.size(); ++t) {
    if (tasks[t].name == name) return t;
  }
  throw Error(ErrorCode::kConfigMismatch, "dataset has no task '" + name + "'");
}

void FillTargets(const std::vector<int>& labels, const std::vector<int64_t>& rows,
                 ad::Tensor& out) {
  out.Resize({static_cast<int64_t>(rows.size())});
  for (size_t r = 0; r < rows.size(); ++r) out[r] = static_cast<float>(labels[rows[r]]);
}

}  // namespace

std::vector<int> RandomLabels(size_t count, int n_classes, Rng& rng) {
  if (n_classes < 2) throw Error(ErrorCode::kInvalidConfig, "random labels need >= 2 classes");
  std::vector<int> out(count);
  for (int& label : out) label = static_cast<int>(rng.Below(static_cast<uint64_t>(n_classes)));
  return out;
}

Rng RandomLabelStream(uint64_t seed, size_t branch, int epoch, size_t batch) {
  return Rng::Stream(seed, "random-labels", branch, epoch, batch);
}

std::vector<int64_t> EpochOrder(uint64_t seed, int epoch, int64_t rows) {
  std::vector<int64_t> order(static_cast<size_t>(rows));
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::Stream(seed, "shuffle", epoch);
  rng.Shuffle(std::span<int64_t>(order));
  return order;
}

Trainer::Trainer(ModelConfig config, const std::vector<data::TaskSpec>& tasks, ImageSet train,
                 ImageSet test)
    : model_(std::move(config)), train_(std::move(train)), test_(std::move(test)) {
  normalization_ = ComputeNormalization(train_.images);
  Bind(tasks);
}

Trainer::Trainer(const Checkpoint& checkpoint, const std::vector<data::TaskSpec>& tasks,
                 ImageSet train, ImageSet test)
    : model_(checkpoint.config),
      normalization_(checkpoint.normalization),
      train_(std::move(train)),
      test_(std::move(test)) {
  auto& params = model_.parameters();
  if (checkpoint.parameters.size() != params.size()) {
    throw Error(ErrorCode::kConfigMismatch, "checkpoint parameter list differs from model");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const ad::Parameter& saved = checkpoint.parameters[i];
    if (saved.name != params[i].name || saved.value.shape() != params[i].value.shape()) {
      throw Error(ErrorCode::kConfigMismatch, "checkpoint tensor " + saved.name +
                                                  " does not fit the model");
    }
    params[i].value = saved.value;
  }
  adam_ = checkpoint.adam;
  epoch_ = checkpoint.epoch;
  history_ = checkpoint.history;
  best_.best_test_acc = checkpoint.best_test_acc;
  best_.best_epoch = checkpoint.best_epoch;
  Bind(tasks);
}

void Trainer::Bind(const std::vector<data::TaskSpec>& tasks) {
  const ModelConfig& c = model_.config();
  preserved_column_ = FindTask(tasks, c.preserved_task.name);
  if (tasks[preserved_column_].class_names != c.preserved_task.class_names) {
    throw Error(ErrorCode::kConfigMismatch,
                "preserved task classes differ from the dataset's '" + c.preserved_task.name +
                    "'");
  }
  branch_columns_.clear();
  for (const SuppressionBranch& s : c.suppression) {
    if (!s.known()) {
      branch_columns_.push_back(-1);
      continue;
    }
    const size_t column = FindTask(tasks, s.task);
    if (static_cast<int>(tasks[column].num_classes()) != s.n_classes) {
      throw Error(ErrorCode::kConfigMismatch,
                  "branch for '" + s.task + "' has the wrong class count");
    }
    branch_columns_.push_back(static_cast<int>(column));
  }
  for (ImageSet* set : {&train_, &test_}) {
    if (set->images.rank() != 4 || set->images.dim(1) != c.input_channels ||
        set->images.dim(2) != c.input_side || set->images.dim(3) != c.input_side) {
      throw Error(ErrorCode::kConfigMismatch,
                  "images " + ad::ShapeString(set->images.shape()) +
                      " do not match the model input");
    }
    if (set->labels.size() != tasks.size()) {
      throw Error(ErrorCode::kConfigMismatch, "label table does not follow the registry");
    }
    ApplyNormalization(normalization_, set->images);
  }
  if (train_.size() == 0) throw Error(ErrorCode::kInvalidConfig, "empty training set");
}

StepStats Trainer::ComputeGradients(const std::vector<int64_t>& rows, int epoch, size_t batch) {
  const ModelConfig& c = model_.config();
  ad::Graph& g = model_.graph();
  GatherRows(train_.images, rows, g.MutableInput(model_.input()));
  FillTargets(train_.labels[preserved_column_], rows, g.MutableInput(model_.preserved().target));
  for (size_t i = 0; i < c.suppression.size(); ++i) {
    ad::Tensor& target = g.MutableInput(model_.branches()[i].target);
    if (branch_columns_[i] >= 0) {
      FillTargets(train_.labels[branch_columns_[i]], rows, target);
    } else {
      Rng rng = RandomLabelStream(c.seed, i, epoch, batch);
      const std::vector<int> labels = RandomLabels(rows.size(), c.suppression[i].n_classes, rng);
      target.Resize({static_cast<int64_t>(rows.size())});
      for (size_t r = 0; r < rows.size(); ++r) target[r] = static_cast<float>(labels[r]);
    }
  }
  g.SetTraining(true);
  g.SetRng(Rng::Stream(c.seed, "dropout", epoch, batch));
  g.Forward();

  StepStats stats;
  stats.rows = static_cast<int64_t>(rows.size());
  stats.objective = g.Value(model_.objective())[0];
  if (!std::isfinite(stats.objective)) {
    throw Error(ErrorCode::kDivergence, "non-finite objective at epoch " +
                                            std::to_string(epoch) + ", batch " +
                                            std::to_string(batch));
  }
  stats.preserved_loss = g.Value(model_.preserved().loss)[0];
  for (const HeadNodes& head : model_.branches()) {
    stats.branch_losses.push_back(g.Value(head.loss)[0]);
  }
  const ad::Tensor& logits = g.Value(model_.preserved().logits);
  const int64_t n_classes = logits.dim(1);
  const std::vector<int>& truth = train_.labels[preserved_column_];
  for (size_t r = 0; r < rows.size(); ++r) {
    if (ArgMax(logits.data() + r * n_classes, n_classes) == truth[rows[r]]) {
      ++stats.preserved_correct;
    }
  }
  g.Backward(model_.objective());
  return stats;
}

StepStats Trainer::Step(const std::vector<int64_t>& rows, int epoch, size_t batch) {
  StepStats stats = ComputeGradients(rows, epoch, batch);
  ad::AdamConfig adam;
  adam.lr = model_.config().lr;
  ad::AdamStep(model_.parameter_ptrs(), adam_, adam);
  return stats;
}

double Trainer::Evaluate(const ImageSet& set) {
  ad::Graph& g = model_.graph();
  g.SetTraining(false);
  const std::vector<int>& truth = set.labels[preserved_column_];
  int64_t correct = 0;
  std::vector<int64_t> rows;
  for (int64_t start = 0; start < set.size(); start += kEvalBatch) {
    rows.clear();
    for (int64_t r = start; r < std::min(set.size(), start + kEvalBatch); ++r) rows.push_back(r);
    GatherRows(set.images, rows, g.MutableInput(model_.input()));
    g.Forward(model_.preserved().logits);
    const ad::Tensor& logits = g.Value(model_.preserved().logits);
    const int64_t n_classes = logits.dim(1);
    for (size_t r = 0; r < rows.size(); ++r) {
      if (ArgMax(logits.data() + r * n_classes, n_classes) == truth[rows[r]]) ++correct;
    }
  }
  return set.size() ? static_cast<double>(correct) / static_cast<double>(set.size()) : 0.0;
}

EpochLog Trainer::RunEpoch() {
  const ModelConfig& c = model_.config();
  const int epoch = epoch_ + 1;
  const std::vector<int64_t> order = EpochOrder(c.seed, epoch, train_.size());
  int64_t seen = 0, correct = 0;
  double preserved_sum = 0.0;
  std::vector<double> branch_sums(c.suppression.size(), 0.0);
  std::vector<int64_t> rows;
  size_t batch = 0;
  for (size_t start = 0; start < order.size(); start += c.batch_size, ++batch) {
    const size_t end = std::min(order.size(), start + static_cast<size_t>(c.batch_size));
    rows.assign(order.begin() + static_cast<ptrdiff_t>(start),
                order.begin() + static_cast<ptrdiff_t>(end));
    const StepStats s = Step(rows, epoch, batch);
    seen += s.rows;
    correct += s.preserved_correct;
    preserved_sum += s.preserved_loss * static_cast<double>(s.rows);
    for (size_t i = 0; i < branch_sums.size(); ++i) {
      branch_sums[i] += s.branch_losses[i] * static_cast<double>(s.rows);
    }
  }

  EpochLog log;
  log.epoch = epoch;
  log.preserved_train_acc = static_cast<double>(correct) / static_cast<double>(seen);
  log.preserved_test_acc = Evaluate(test_);
  log.preserved_loss = preserved_sum / static_cast<double>(seen);
  for (double s : branch_sums) log.branch_losses.push_back(s / static_cast<double>(seen));
  log.combined_loss = CombinedLoss(log.preserved_loss, log.branch_losses, c.lambda);

  epoch_ = epoch;
  history_.push_back(log);
  if (log.preserved_test_acc > best_.best_test_acc) {
    best_ = Snapshot();
    best_.best_test_acc = log.preserved_test_acc;
    best_.best_epoch = epoch;
  }
  return log;
}

Checkpoint Trainer::Snapshot() const {
  Checkpoint ck;
  ck.config = model_.config();
  ck.normalization = normalization_;
  ck.epoch = epoch_;
  for (const ad::Parameter& p : model_.parameters()) ck.parameters.push_back({p.name, p.value, {}});
  ck.adam = adam_;
  ck.best_test_acc = best_.best_test_acc;
  ck.best_epoch = best_.best_epoch;
  ck.history = history_;
  return ck;
}

std::string FormatTrainingLog(const std::vector<EpochLog>& history, size_t branches) {
  std::string out = "epoch,preserved_train_acc,preserved_test_acc";
  for (size_t i = 0; i < branches; ++i) out += ",branch_" + std::to_string(i) + "_loss";
  out += ",preserved_loss,combined_loss\n";
  char buf[64];
  for (const EpochLog& e : history) {
    out += std::to_string(e.epoch);
    for (double v : {e.preserved_train_acc, e.preserved_test_acc}) {
      std::snprintf(buf, sizeof(buf), ",%.6f", v);
      out += buf;
    }
    for (double v : e.branch_losses) {
      std::snprintf(buf, sizeof(buf), ",%.8g", v);
      out += buf;
    }
    for (double v : {e.preserved_loss, e.combined_loss}) {
      std::snprintf(buf, sizeof(buf), ",%.8g", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

Checkpoint Train(const ModelConfig& config, const fs::path& data_dir, const fs::path& out_dir,
                 const TrainOptions& options) {
  config.Validate();
  const data::Manifest manifest = data::ReadManifest(data_dir / data::kManifestFileName);
  ImageSet train = LoadImageSet(manifest, data_dir, data::Split::kTrain);
  ImageSet test = LoadImageSet(manifest, data_dir, data::Split::kTest);
  EnsureDirectory(out_dir);

  const fs::path last_path = out_dir / kLastCheckpoint;
  const fs::path best_path = out_dir / kBestCheckpoint;
  std::unique_ptr<Trainer> trainer;
  if (options.resume && fs::exists(last_path)) {
    const Checkpoint last = LoadCheckpoint(last_path);
    if (!(last.config == config)) {
      throw Error(ErrorCode::kConfigMismatch, "last.ckpt was written with a different config");
    }
    trainer = std::make_unique<Trainer>(last, manifest.tasks, std::move(train), std::move(test));
    if (fs::exists(best_path)) {
      // Keep the best snapshot so a resumed run writes the same best.ckpt.
      trainer->RestoreBest(LoadCheckpoint(best_path));
    }
  } else {
    trainer = std::make_unique<Trainer>(config, manifest.tasks, std::move(train), std::move(test));
  }
  WriteFileText(out_dir / "config.json", config.ToJson().dump(2) + "\n");

  int ran = 0;
  while (!trainer->done() && (options.max_epochs <= 0 || ran < options.max_epochs)) {
    const EpochLog log = trainer->RunEpoch();
    ++ran;
    if (trainer->best().best_epoch == log.epoch) SaveCheckpoint(best_path, trainer->best());
    SaveCheckpoint(last_path, trainer->Snapshot());
    WriteFileText(out_dir / kTrainingLog,
                  FormatTrainingLog(trainer->history(), config.suppression.size()));
    if (options.on_epoch) options.on_epoch(log);
  }
  return trainer->best();
}

}  // namespace overlearn::train
