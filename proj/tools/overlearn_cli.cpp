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

// Command-line front end: dataset generation, training, probing and trust
// reporting.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "overlearn/common/error.hpp"
#include "overlearn/common/io.hpp"
#include "overlearn/data/generator.hpp"
#include "overlearn/mnist/color_mnist.hpp"
#include "overlearn/mnist/fetch.hpp"
#include "overlearn/probe/matrix.hpp"
#include "overlearn/report/report.hpp"
#include "overlearn/train/features.hpp"
#include "overlearn/train/trainer.hpp"
#include "overlearn/trust/trust.hpp"

namespace fs = std::filesystem;
using namespace overlearn;

namespace {

std::vector<train::ConvBlock> ParseBlocks(const std::string& spec, int kernel) {
  std::vector<train::ConvBlock> blocks;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      blocks.push_back({std::stoi(item), kernel});
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidConfig, "bad conv filter count '" + item + "'");
    }
  }
  return blocks;
}

const data::TaskSpec& FindTask(const data::Manifest& manifest, const std::string& name) {
  return manifest.tasks.at(manifest.TaskIndex(name));
}

void PrintProbe(const std::string& preserved, const std::string& probed,
                const probe::ProbeResult& r) {
  std::printf("  %-12s -> %-12s acc %.4f  chance %.4f  epochs %d\n", preserved.c_str(),
              probed.c_str(), r.test_accuracy, r.chance, r.epochs_run);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measure and suppress overlearning in CNN feature extractors"};
  app.require_subcommand(1);

  // gen
  data::GenConfig gen;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "Generate the synthetic five-task image dataset");
  gen_cmd->add_option("--out", gen_out, "Output directory")->required();
  gen_cmd->add_option("--side", gen.image_side, "Image side in pixels");
  gen_cmd->add_option("--train-per-var", gen.train_per_variation, "Training images per variation");
  gen_cmd->add_option("--test-per-var", gen.test_per_variation, "Test images per variation");
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--jitter", gen.jitter, "Position jitter as a fraction of the cell");

  // mnist
  std::string raw_dir, mnist_out, fetch_url;
  mnist::ColorMnistConfig color;
  auto* mnist_cmd = app.add_subcommand("mnist", "Build colored MNIST from IDX files");
  mnist_cmd->add_option("--raw", raw_dir, "Directory with the IDX files")->required();
  mnist_cmd->add_option("--out", mnist_out, "Output directory")->required();
  mnist_cmd->add_option("--seed", color.seed, "Color assignment seed");
  mnist_cmd->add_option("--fetch", fetch_url, "Download the IDX files from this base URL first");

  // train
  train::ModelConfig model;
  std::string data_dir, train_out, mode = "gr", conv_spec = "16,32";
  std::vector<std::string> suppress;
  int kernel = 3;
  double alpha = -1.0;
  bool resume = false, random_default = false;
  auto* train_cmd = app.add_subcommand("train", "Train a feature extractor");
  train_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  train_cmd->add_option("--preserve", model.preserved_task.name, "Preserved task")->required();
  train_cmd->add_option("--suppress", suppress, "Task name or random:N (repeatable)");
  train_cmd->add_flag("--suppress-random-all", random_default,
                      "One random branch per other class count in the registry");
  train_cmd->add_option("--mode", mode, "Known-task suppression: gr or negloss")
      ->check(CLI::IsMember({"gr", "negloss"}));
  train_cmd->add_option("--lambda", model.lambda, "Weight of the preserved loss");
  train_cmd->add_option("--alpha", alpha, "Gradient reversal scale (default 1 - lambda)");
  train_cmd->add_option("--loss-cap-scale", model.loss_cap_scale,
                        "Cap on climbed branch losses, in units of ln(n)");
  train_cmd->add_option("--epochs", model.epochs, "Epoch budget");
  train_cmd->add_option("--lr", model.lr, "Adam learning rate");
  train_cmd->add_option("--batch", model.batch_size, "Minibatch size");
  train_cmd->add_option("--conv", conv_spec, "Filters per conv block, comma separated");
  train_cmd->add_option("--kernel", kernel, "Conv kernel size");
  train_cmd->add_option("--fc", model.fc_feature_dim, "Feature dimension");
  train_cmd->add_option("--head-hidden", model.head_hidden, "Hidden width of suppression heads");
  train_cmd->add_option("--seed", model.seed, "Random seed");
  train_cmd->add_option("--out", train_out, "Run directory")->required();
  train_cmd->add_flag("--resume", resume, "Continue from last.ckpt in the run directory");

  // features
  std::string ckpt_path, features_data, features_out;
  auto* features_cmd = app.add_subcommand("features", "Dump frozen features of both splits");
  features_cmd->add_option("--ckpt", ckpt_path, "Checkpoint file")->required();
  features_cmd->add_option("--data", features_data, "Dataset directory")->required();
  features_cmd->add_option("--out", features_out, "Output directory")->required();

  // probe
  std::string probe_features, probe_task;
  probe::ProbeConfig probe_config;
  auto* probe_cmd = app.add_subcommand("probe", "Probe one task on dumped features");
  probe_cmd->add_option("--features", probe_features, "Directory written by 'features'")
      ->required();
  probe_cmd->add_option("--task", probe_task, "Task to probe")->required();
  probe_cmd->add_option("--seed", probe_config.seed, "Probe seed");

  // matrix
  std::string runs_dir, matrix_data, matrix_out, matrix_baseline, row_ckpt;
  auto* matrix_cmd = app.add_subcommand("matrix", "Build the task-by-task performance matrix");
  matrix_cmd->add_option("--runs", runs_dir, "Directory with <task>/best.ckpt per task");
  matrix_cmd->add_option("--data", matrix_data, "Dataset directory")->required();
  matrix_cmd->add_option("--out", matrix_out, "Output matrix.json")->required();
  matrix_cmd->add_option("--baseline", matrix_baseline,
                         "Existing matrix whose row is replaced by --row-ckpt");
  matrix_cmd->add_option("--row-ckpt", row_ckpt, "Checkpoint supplying the replacement row");
  matrix_cmd->add_option("--seed", probe_config.seed, "Probe seed");

  // trust
  std::string trust_matrix, trust_baseline;
  auto* trust_cmd = app.add_subcommand("trust", "Trust score of a performance matrix");
  trust_cmd->add_option("--matrix", trust_matrix, "matrix.json")->required();
  trust_cmd->add_option("--baseline", trust_baseline, "Compare against this matrix");

  // report
  std::string report_run, report_out;
  std::vector<std::string> compare;
  auto* report_cmd = app.add_subcommand("report", "Write CSV/JSON/SVG/Markdown artifacts");
  report_cmd->add_option("--run", report_run, "Directory containing matrix.json")->required();
  report_cmd->add_option("--out", report_out, "Output directory")->required();
  report_cmd->add_option("--compare", compare, "Suppressed-variant matrix.json (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) {
      const data::Manifest m = data::GenerateDataset(gen, gen_out);
      std::printf("wrote %zu train and %zu test images to %s\n", m.Count(data::Split::kTrain),
                  m.Count(data::Split::kTest), gen_out.c_str());
    } else if (*mnist_cmd) {
      if (!fetch_url.empty()) mnist::FetchFiles(fetch_url, mnist::StandardMnistFiles(), raw_dir);
      const mnist::MnistSplit train_split = mnist::LoadSplit(raw_dir, data::Split::kTrain);
      const mnist::MnistSplit test_split = mnist::LoadSplit(raw_dir, data::Split::kTest);
      const data::Manifest m = mnist::Colorize(train_split, test_split, color, mnist_out);
      std::printf("wrote %zu train and %zu test images to %s\n", m.Count(data::Split::kTrain),
                  m.Count(data::Split::kTest), mnist_out.c_str());
    } else if (*train_cmd) {
      const data::Manifest manifest = data::ReadManifest(fs::path(data_dir) / data::kManifestFileName);
      model.preserved_task = FindTask(manifest, model.preserved_task.name);
      model.conv_blocks = ParseBlocks(conv_spec, kernel);
      model.input_side =
          data::ReadPng(fs::path(data_dir) / manifest.rows.at(0).path).width();
      if (random_default) model.suppression = train::DefaultRandomBranches(manifest.tasks, model.preserved_task);
      for (const std::string& s : suppress) {
        train::SuppressionBranch b;
        if (s.rfind("random:", 0) == 0) {
          b.mode = train::SuppressionMode::kRandomGr;
          b.n_classes = std::stoi(s.substr(7));
        } else {
          b.mode = mode == "gr" ? train::SuppressionMode::kKnownGr
                                : train::SuppressionMode::kKnownNegativeLoss;
          b.task = s;
          b.n_classes = static_cast<int>(FindTask(manifest, s).num_classes());
        }
        model.suppression.push_back(b);
      }
      if (alpha >= 0.0) {
        for (auto& b : model.suppression) b.alpha = alpha;
      }
      train::TrainOptions options;
      options.resume = resume;
      options.on_epoch = [&](const train::EpochLog& e) {
        std::printf("epoch %3d  train %.4f  test %.4f  loss %.4f", e.epoch,
                    e.preserved_train_acc, e.preserved_test_acc, e.preserved_loss);
        for (size_t i = 0; i < e.branch_losses.size(); ++i) {
          std::printf("  branch%zu %.4f", i, e.branch_losses[i]);
        }
        std::printf("\n");
        std::fflush(stdout);
      };
      const train::Checkpoint best = train::Train(model, data_dir, train_out, options);
      std::printf("best preserved test accuracy %.4f at epoch %d\n", best.best_test_acc,
                  best.best_epoch);
    } else if (*features_cmd) {
      const train::Checkpoint ck = train::LoadCheckpoint(ckpt_path);
      const fs::path dir(features_data);
      const data::Manifest manifest = data::ReadManifest(dir / data::kManifestFileName);
      EnsureDirectory(features_out);
      for (data::Split split : {data::Split::kTrain, data::Split::kTest}) {
        const train::FeatureTable t = train::ExtractFeatures(ck, manifest, dir, split);
        train::WriteFeatures(fs::path(features_out) / std::string(data::SplitName(split)), t);
        std::printf("%s: %lld x %lld\n", std::string(data::SplitName(split)).c_str(),
                    static_cast<long long>(t.rows), static_cast<long long>(t.cols));
      }
    } else if (*probe_cmd) {
      const train::FeatureTable tr = train::ReadFeatures(fs::path(probe_features) / "train");
      const train::FeatureTable te = train::ReadFeatures(fs::path(probe_features) / "test");
      const probe::ProbeResult r = probe::ProbeTask(tr, te, probe_task, probe_config);
      std::cout << r.ToJson().dump(2) << "\n";
    } else if (*matrix_cmd) {
      probe::PerformanceMatrix m;
      if (!matrix_baseline.empty()) {
        if (row_ckpt.empty()) throw Error(ErrorCode::kInvalidConfig, "--baseline needs --row-ckpt");
        const probe::PerformanceMatrix base = probe::ReadMatrix(matrix_baseline);
        const train::Checkpoint ck = train::LoadCheckpoint(row_ckpt);
        const fs::path dir(matrix_data);
        const data::Manifest manifest = data::ReadManifest(dir / data::kManifestFileName);
        const size_t row = manifest.TaskIndex(ck.config.preserved_task.name);
        const probe::ProbeRow probes = probe::ProbeCheckpoint(ck, manifest, dir, probe_config);
        for (size_t j = 0; j < probes.results.size(); ++j) {
          PrintProbe(manifest.tasks[row].name, manifest.tasks[j].name, probes.results[j]);
        }
        m = probe::ReplaceRow(base, row, probes,
                              {{"checkpoint", fs::path(row_ckpt).filename().string()},
                               {"config", ck.config.ToJson()}});
      } else {
        if (runs_dir.empty()) throw Error(ErrorCode::kInvalidConfig, "--runs is required");
        m = probe::BuildMatrix(runs_dir, matrix_data, probe_config, PrintProbe);
      }
      probe::WriteMatrix(matrix_out, m);
      std::printf("trust %.4f\n", trust::Evaluate(m).score);
    } else if (*trust_cmd) {
      const probe::PerformanceMatrix m = probe::ReadMatrix(trust_matrix);
      const trust::TrustReport r = trust::Evaluate(m);
      nlohmann::json out = r.ToJson();
      if (!trust_baseline.empty()) {
        const trust::TrustReport base = trust::Evaluate(probe::ReadMatrix(trust_baseline));
        out["versus_baseline"] = trust::Delta(base, r).ToJson(r.tasks);
      }
      std::cout << out.dump(2) << "\n";
      std::fprintf(stderr, "trust score %.4f (%s), %zu overlearned cells\n", r.score,
                   std::string(trust::BandName(r.band)).c_str(), r.overlearning.size());
    } else if (*report_cmd) {
      const probe::PerformanceMatrix base = probe::ReadMatrix(fs::path(report_run) / "matrix.json");
      std::vector<report::Comparison> comparisons;
      for (const std::string& c : compare) {
        comparisons.push_back({fs::path(c).stem().string(), probe::ReadMatrix(c)});
      }
      report::ExportReport(base, comparisons, report_out);
      std::printf("report written to %s\n", report_out.c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(ErrorCodeName(e.code())).c_str(),
                 e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
