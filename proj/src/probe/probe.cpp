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

#include "overlearn/probe/probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "overlearn/ad/adam.hpp"
#include "overlearn/ad/graph.hpp"
#include "overlearn/common/error.hpp"
#include "overlearn/common/rng.hpp"

namespace overlearn::probe {

namespace {

[[noreturn]] void Invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidConfig, "probe: " + what);
}

struct Mlp {
  std::vector<ad::Parameter> params;
  ad::Graph graph;
  ad::NodeId input, logits, target, loss;
};

void BuildMlp(Mlp& mlp, int64_t in, int n_classes, const ProbeConfig& config) {
  std::vector<int64_t> widths = {in};
  for (int h : config.hidden) widths.push_back(h);
  widths.push_back(n_classes);
  mlp.params.reserve(2 * (widths.size() - 1));
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::string name = "dense" + std::to_string(l + 1);
    ad::Parameter w{name + "/w", ad::Tensor({widths[l], widths[l + 1]}), {}};
    const double limit = std::sqrt(6.0 / static_cast<double>(widths[l]));
    Rng rng = Rng::Stream(config.seed, "probe-init", w.name);
    for (int64_t i = 0; i < w.value.size(); ++i) {
      w.value[i] = static_cast<float>(rng.Uniform(-limit, limit));
    }
    mlp.params.push_back(std::move(w));
    mlp.params.push_back({name + "/b", ad::Tensor({widths[l + 1]}), {}});
  }
  ad::Graph& g = mlp.graph;
  mlp.input = g.Input("features");
  ad::NodeId x = mlp.input;
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    x = g.AddBias(g.MatMul(x, g.Param(mlp.params[2 * l])), g.Param(mlp.params[2 * l + 1]));
    if (l + 2 < widths.size()) {
      x = g.Relu(x);
      if (config.dropout[l] > 0) x = g.Dropout(x, static_cast<float>(config.dropout[l]));
    }
  }
  mlp.logits = x;
  mlp.target = g.Input("labels");
  mlp.loss = g.SoftmaxCrossEntropy(mlp.logits, mlp.target);
}

void LoadBatch(const std::vector<float>& x, const std::vector<int>& y, int64_t cols,
               const std::vector<int64_t>& rows, ad::Graph& g, ad::NodeId input,
               ad::NodeId target) {
  ad::Tensor& in = g.MutableInput(input);
  in.Resize({static_cast<int64_t>(rows.size()), cols});
  ad::Tensor& t = g.MutableInput(target);
  t.Resize({static_cast<int64_t>(rows.size())});
  for (size_t r = 0; r < rows.size(); ++r) {
    std::copy(x.begin() + rows[r] * cols, x.begin() + (rows[r] + 1) * cols,
              in.data() + static_cast<int64_t>(r) * cols);
    t[static_cast<int64_t>(r)] = static_cast<float>(y[rows[r]]);
  }
}

// Mean loss and accuracy in evaluation mode.
std::pair<double, double> Score(Mlp& mlp, const std::vector<float>& x, const std::vector<int>& y,
                                int64_t cols) {
  constexpr int64_t kBatch = 512;
  const int64_t n = static_cast<int64_t>(y.size());
  mlp.graph.SetTraining(false);
  double loss = 0.0;
  int64_t correct = 0;
  std::vector<int64_t> rows;
  for (int64_t start = 0; start < n; start += kBatch) {
    rows.resize(static_cast<size_t>(std::min(kBatch, n - start)));
    std::iota(rows.begin(), rows.end(), start);
    LoadBatch(x, y, cols, rows, mlp.graph, mlp.input, mlp.target);
    mlp.graph.Forward();
    loss += mlp.graph.Value(mlp.loss)[0] * static_cast<double>(rows.size());
    const ad::Tensor& logits = mlp.graph.Value(mlp.logits);
    const int64_t c = logits.dim(1);
    for (size_t r = 0; r < rows.size(); ++r) {
      const float* row = logits.data() + static_cast<int64_t>(r) * c;
      if (std::max_element(row, row + c) - row == y[rows[r]]) ++correct;
    }
  }
  return {loss / static_cast<double>(n), static_cast<double>(correct) / static_cast<double>(n)};
}

}  // namespace

void ProbeConfig::Validate() const {
  if (hidden.empty() || hidden.size() != dropout.size()) {
    Invalid("each hidden layer needs a dropout rate");
  }
  for (int h : hidden) {
    if (h < 1) Invalid("hidden widths must be positive");
  }
  for (double p : dropout) {
    if (!(p >= 0.0 && p < 1.0)) Invalid("dropout must lie in [0, 1)");
  }
  if (!(lr > 0.0)) Invalid("learning rate must be positive");
  if (batch_size < 1 || max_epochs < 1 || patience < 1) {
    Invalid("batch size, epochs and patience must be positive");
  }
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) Invalid("val_fraction must lie in (0, 1)");
}

nlohmann::json ProbeConfig::ToJson() const {
  return {{"hidden", hidden},   {"dropout", dropout},       {"lr", lr},
          {"batch_size", batch_size}, {"max_epochs", max_epochs}, {"patience", patience},
          {"val_fraction", val_fraction}, {"seed", seed}};
}

ProbeConfig ProbeConfig::FromJson(const nlohmann::json& json) {
  ProbeConfig c;
  c.hidden = json.at("hidden").get<std::vector<int>>();
  c.dropout = json.at("dropout").get<std::vector<double>>();
  c.lr = json.at("lr").get<double>();
  c.batch_size = json.at("batch_size").get<int>();
  c.max_epochs = json.at("max_epochs").get<int>();
  c.patience = json.at("patience").get<int>();
  c.val_fraction = json.at("val_fraction").get<double>();
  c.seed = json.at("seed").get<uint64_t>();
  return c;
}

nlohmann::json ProbeResult::ToJson() const {
  return {{"test_accuracy", test_accuracy}, {"chance", chance},
          {"n_classes", n_classes},         {"epochs_run", epochs_run},
          {"best_epoch", best_epoch},       {"best_val_loss", best_val_loss},
          {"train_rows", train_rows},       {"val_rows", val_rows},
          {"test_rows", test_rows}};
}

ProbeResult TrainProbe(const ProbeData& train, const ProbeData& test, int n_classes,
                       const ProbeConfig& config) {
  config.Validate();
  if (train.cols != test.cols || train.cols < 1) {
    throw Error(ErrorCode::kShapeMismatch, "probe train and test widths differ");
  }
  for (const ProbeData* d : {&train, &test}) {
    if (static_cast<int64_t>(d->y.size()) != d->rows ||
        static_cast<int64_t>(d->x.size()) != d->rows * d->cols) {
      throw Error(ErrorCode::kShapeMismatch, "probe data does not fill rows x cols");
    }
    for (int label : d->y) {
      if (label < 0 || label >= n_classes) {
        throw Error(ErrorCode::kShapeMismatch, "probe label outside the class range");
      }
    }
  }
  if (test.rows == 0) throw Error(ErrorCode::kInvalidConfig, "probe test set is empty");
  {
    std::vector<int> seen(train.y);
    std::sort(seen.begin(), seen.end());
    if (std::unique(seen.begin(), seen.end()) - seen.begin() < 2) {
      throw Error(ErrorCode::kDegenerateLabels, "probe labels contain a single class");
    }
  }

  // Hold-out split.
  std::vector<int64_t> order(static_cast<size_t>(train.rows));
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng = Rng::Stream(config.seed, "probe-split");
  split_rng.Shuffle(std::span<int64_t>(order));
  const int64_t n_val = std::max<int64_t>(
      1, static_cast<int64_t>(std::llround(config.val_fraction * static_cast<double>(train.rows))));
  const int64_t n_fit = train.rows - n_val;
  if (n_fit < 1) throw Error(ErrorCode::kInvalidConfig, "too few rows for a validation split");
  const int64_t cols = train.cols;

  auto take = [&](int64_t from, int64_t to, std::vector<float>& x, std::vector<int>& y) {
    for (int64_t i = from; i < to; ++i) {
      const int64_t r = order[static_cast<size_t>(i)];
      x.insert(x.end(), train.x.begin() + r * cols, train.x.begin() + (r + 1) * cols);
      y.push_back(train.y[static_cast<size_t>(r)]);
    }
  };
  std::vector<float> fit_x, val_x, test_x = test.x;
  std::vector<int> fit_y, val_y;
  take(0, n_fit, fit_x, fit_y);
  take(n_fit, train.rows, val_x, val_y);

  // Per-feature z-normalization from the fitting rows.
  std::vector<double> mean(static_cast<size_t>(cols), 0.0), sq(static_cast<size_t>(cols), 0.0);
  for (int64_t r = 0; r < n_fit; ++r) {
    for (int64_t c = 0; c < cols; ++c) {
      const double v = fit_x[r * cols + c];
      mean[c] += v;
      sq[c] += v * v;
    }
  }
  std::vector<float> mu(static_cast<size_t>(cols)), inv(static_cast<size_t>(cols));
  for (int64_t c = 0; c < cols; ++c) {
    const double m = mean[c] / static_cast<double>(n_fit);
    const double var = std::max(0.0, sq[c] / static_cast<double>(n_fit) - m * m);
    mu[c] = static_cast<float>(m);
    inv[c] = var > 1e-12 ? static_cast<float>(1.0 / std::sqrt(var)) : 1.0f;
  }
  for (std::vector<float>* x : {&fit_x, &val_x, &test_x}) {
    for (size_t i = 0; i < x->size(); ++i) {
      const size_t c = i % static_cast<size_t>(cols);
      (*x)[i] = ((*x)[i] - mu[c]) * inv[c];
    }
  }

  Mlp mlp;
  BuildMlp(mlp, cols, n_classes, config);
  std::vector<ad::Parameter*> params;
  for (ad::Parameter& p : mlp.params) params.push_back(&p);
  ad::AdamState adam;
  ad::AdamConfig adam_config;
  adam_config.lr = config.lr;

  ProbeResult result;
  result.n_classes = n_classes;
  result.train_rows = n_fit;
  result.val_rows = n_val;
  result.test_rows = test.rows;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<ad::Tensor> best_weights;
  int since_best = 0;
  std::vector<int64_t> fit_order(static_cast<size_t>(n_fit)), rows;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(fit_order.begin(), fit_order.end(), 0);
    Rng shuffle = Rng::Stream(config.seed, "probe-shuffle", epoch);
    shuffle.Shuffle(std::span<int64_t>(fit_order));
    size_t batch = 0;
    for (int64_t start = 0; start < n_fit; start += config.batch_size, ++batch) {
      rows.assign(fit_order.begin() + start,
                  fit_order.begin() + std::min<int64_t>(n_fit, start + config.batch_size));
      LoadBatch(fit_x, fit_y, cols, rows, mlp.graph, mlp.input, mlp.target);
      mlp.graph.SetTraining(true);
      mlp.graph.SetRng(Rng::Stream(config.seed, "probe-dropout", epoch, batch));
      mlp.graph.Forward();
      mlp.graph.Backward(mlp.loss);
      ad::AdamStep(params, adam, adam_config);
    }
    result.epochs_run = epoch;
    const double val_loss = Score(mlp, val_x, val_y, cols).first;
    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      since_best = 0;
      best_weights.clear();
      for (const ad::Parameter& p : mlp.params) best_weights.push_back(p.value);
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  for (size_t i = 0; i < mlp.params.size(); ++i) mlp.params[i].value = best_weights[i];

  std::vector<int> test_y = test.y;
  result.test_accuracy = Score(mlp, test_x, test_y, cols).second;
  std::vector<int64_t> counts(static_cast<size_t>(n_classes), 0);
  for (int label : test.y) ++counts[label];
  result.chance = static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
                  static_cast<double>(test.rows);
  return result;
}

ProbeData SliceTask(const train::FeatureTable& table, const std::string& task) {
  ProbeData d;
  d.rows = table.rows;
  d.cols = table.cols;
  d.x = table.values;
  d.y = table.labels.at(table.TaskIndex(task));
  return d;
}

ProbeResult ProbeTask(const train::FeatureTable& train, const train::FeatureTable& test,
                      const std::string& task, const ProbeConfig& config) {
  const size_t t = train.TaskIndex(task);
  if (!(train.tasks == test.tasks)) {
    throw Error(ErrorCode::kRegistryMismatch, "train and test features use different tasks");
  }
  return TrainProbe(SliceTask(train, task), SliceTask(test, task),
                    static_cast<int>(train.tasks[t].num_classes()), config);
}

}  // namespace overlearn::probe
