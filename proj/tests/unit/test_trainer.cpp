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

#include <algorithm>
#include <cmath>
#include <limits>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "doctest.h"
#include "overlearn/common/error.hpp"
#include "overlearn/common/io.hpp"
#include "overlearn/data/generator.hpp"
#include "overlearn/train/checkpoint.hpp"
#include "overlearn/train/config.hpp"
#include "overlearn/train/dataset.hpp"
#include "overlearn/train/features.hpp"
#include "overlearn/train/model.hpp"
#include "overlearn/train/trainer.hpp"
#include "reference_ops.hpp"
#include "temp_dir.hpp"

using namespace overlearn;
using namespace overlearn::train;
using reference::DTensor;
namespace fs = std::filesystem;

namespace {

template <typename F>
void ExpectCode(ErrorCode code, F&& f) {
  try {
    f();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

const data::TaskSpec& Task(const std::string& name) {
  for (const auto& t : data::PreserveTaskRegistry())
    if (t.name == name) return t;
  throw std::runtime_error("no task " + name);
}

SuppressionBranch Known(const std::string& task, SuppressionMode mode = SuppressionMode::kKnownGr) {
  return {mode, static_cast<int>(Task(task).num_classes()), task, std::nullopt};
}

SuppressionBranch Random(int n) { return {SuppressionMode::kRandomGr, n, "", std::nullopt}; }

// A 32 px dataset with one image per variation and split, shared by the tests.
struct Fixture {
  TempDir dir{"trainer-data"};
  data::Manifest manifest;
  ImageSet train, test;
  Fixture() {
    data::GenConfig g;
    g.image_side = 32;
    g.train_per_variation = 1;
    g.test_per_variation = 1;
    g.seed = 5;
    manifest = data::GenerateDataset(g, dir.path());
    train = LoadImageSet(manifest, dir.path(), data::Split::kTrain);
    test = LoadImageSet(manifest, dir.path(), data::Split::kTest);
  }
};

Fixture& Data() {
  static Fixture f;
  return f;
}

ModelConfig SmallConfig(const std::string& preserved = "shape") {
  ModelConfig c;
  c.input_side = 32;
  c.conv_blocks = {{4, 3}, {8, 3}};
  c.fc_feature_dim = 16;
  c.preserved_task = Task(preserved);
  c.lr = 1e-3;
  c.batch_size = 64;
  c.epochs = 2;
  c.seed = 11;
  return c;
}

Trainer MakeTrainer(const ModelConfig& c) {
  return Trainer(c, Data().manifest.tasks, Data().train, Data().test);
}

std::vector<uint8_t> ParameterBytes(const std::vector<ad::Parameter>& params) {
  std::vector<uint8_t> out;
  for (const auto& p : params) {
    const auto* b = reinterpret_cast<const uint8_t*>(p.value.data());
    out.insert(out.end(), b, b + p.value.size() * sizeof(float));
  }
  return out;
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig c = SmallConfig();
  CHECK_NOTHROW(c.Validate());
  c.suppression = {Random(5)};  // same class count as shape
  ExpectCode(ErrorCode::kInvalidConfig, [&] { c.Validate(); });
  c.suppression = {Random(1)};
  ExpectCode(ErrorCode::kInvalidConfig, [&] { c.Validate(); });
  c.suppression = {Known("shape")};
  ExpectCode(ErrorCode::kInvalidConfig, [&] { c.Validate(); });
  c.suppression = {{SuppressionMode::kKnownGr, 3, "", std::nullopt}};
  ExpectCode(ErrorCode::kInvalidConfig, [&] { c.Validate(); });
  c.suppression = {{SuppressionMode::kRandomGr, 3, "size", std::nullopt}};
  ExpectCode(ErrorCode::kInvalidConfig, [&] { c.Validate(); });
  c.suppression = {Random(3), Known("background", SuppressionMode::kKnownNegativeLoss)};
  CHECK_NOTHROW(c.Validate());
  c.lambda = 1.5;
  ExpectCode(ErrorCode::kInvalidConfig, [&] { c.Validate(); });
  c.lambda = 0.5;
  CHECK(ModelConfig::FromJson(c.ToJson()) == c);
  CHECK(ParseSuppressionMode(SuppressionModeName(SuppressionMode::kKnownNegativeLoss)) ==
        SuppressionMode::kKnownNegativeLoss);
}

TEST_CASE("default random branches cover the other class counts") {
  auto counts = [](const std::vector<SuppressionBranch>& bs) {
    std::vector<int> n;
    for (const auto& b : bs) {
      CHECK(b.mode == SuppressionMode::kRandomGr);
      n.push_back(b.n_classes);
    }
    return n;
  };
  const auto& r = data::PreserveTaskRegistry();
  CHECK(counts(DefaultRandomBranches(r, Task("shape"))) == std::vector<int>{3, 4, 7});
  CHECK(counts(DefaultRandomBranches(r, Task("size"))) == std::vector<int>{4, 5, 7});
  CHECK(counts(DefaultRandomBranches(r, Task("color"))) == std::vector<int>{3, 4, 5});
}

TEST_CASE("combined loss algebra") {
  CHECK(CombinedLoss(0.6, {0.2}, 0.5) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(CombinedLoss(0.731, {0.4, 2.0}, 1.0) == 0.731);
  CHECK(CombinedLoss(0.731, {}, 0.3) == 0.731);
  CHECK(CombinedLoss(1.0, {0.5, 0.25}, 0.25) == doctest::Approx(0.25 - 0.75 * 0.75));
}

TEST_CASE("parameter count matches the topology") {
  ModelConfig c = SmallConfig();
  // conv1 4*3*9+4, conv2 8*4*9+8, fc (8*8*8)*16+16, head 16*5+5
  const int64_t base = 112 + 296 + 8208 + 85;
  CHECK(Model(c).ParameterCount() == base);
  CHECK(ExpectedParameterCount(c) == base);
  c.suppression = {Random(3), Known("location")};
  CHECK(Model(c).ParameterCount() == base + (16 * 3 + 3) + (16 * 4 + 4));
  c.head_hidden = 6;
  CHECK(Model(c).ParameterCount() ==
        base + (16 * 6 + 6 + 6 * 3 + 3) + (16 * 6 + 6 + 6 * 4 + 4));
  CHECK(ExpectedParameterCount(c) == Model(c).ParameterCount());
}

TEST_CASE("suppression head widths and attachment") {
  ModelConfig c = SmallConfig();
  c.suppression = {Random(3), Known("background", SuppressionMode::kKnownNegativeLoss)};
  Model m(c);
  REQUIRE(m.branches().size() == 2);
  ad::Graph& g = m.graph();
  g.SetInput(m.input(), ad::Tensor({2, 3, 32, 32}, 0.1f));
  g.SetInput(m.preserved().target, ad::Tensor({2}, 0.0f));
  for (const auto& b : m.branches()) g.SetInput(b.target, ad::Tensor({2}, 1.0f));
  g.Forward();
  CHECK(g.Value(m.branches()[0].logits).shape() == ad::Shape{2, 3});
  CHECK(g.Value(m.branches()[1].logits).shape() == ad::Shape{2, 3});
  CHECK(g.Value(m.preserved().logits).shape() == ad::Shape{2, 5});
  CHECK(g.Value(m.features()).shape() == ad::Shape{2, 16});
  size_t reversals = 0;
  for (int32_t i = 0; i < static_cast<int32_t>(g.size()); ++i) {
    reversals += g.OpOf({i}) == ad::Op::kGradReverse;
  }
  // The reversal head runs twice: once reversed, once detached.
  CHECK(reversals == 2);
}

namespace {

struct TinySetup {
  ModelConfig config;
  ad::Tensor images;
  ad::Tensor preserved_labels, branch_labels;
};

TinySetup Tiny(uint64_t seed, SuppressionMode mode) {
  TinySetup s;
  s.config.input_side = 8;
  s.config.conv_blocks = {{2, 3}};
  s.config.fc_feature_dim = 5;
  s.config.preserved_task = Task("size");
  s.config.suppression = {Known("location", mode)};
  s.config.lambda = 0.3;
  s.config.seed = seed;
  Rng rng = Rng::Stream(seed, "tiny");
  s.images = ad::Tensor({4, 3, 8, 8});
  for (float& v : s.images.values()) v = static_cast<float>(rng.Uniform(-1, 1));
  s.preserved_labels = ad::Tensor({4});
  s.branch_labels = ad::Tensor({4});
  for (int i = 0; i < 4; ++i) {
    s.preserved_labels[i] = static_cast<float>(rng.Below(3));
    s.branch_labels[i] = static_cast<float>(rng.Below(4));
  }
  return s;
}

void RunBackward(Model& m, const TinySetup& s) {
  ad::Graph& g = m.graph();
  g.SetInput(m.input(), s.images);
  g.SetInput(m.preserved().target, s.preserved_labels);
  g.SetInput(m.branches()[0].target, s.branch_labels);
  g.SetTraining(true);
  g.Forward();
  g.Backward(m.objective());
}

// Double-precision forward of the tiny model; parameters in model order:
// conv1/w, conv1/b, fc/w, fc/b, preserved w, b, branch w, b.
struct TinyLosses {
  double preserved, suppressed;
};

TinyLosses TinyForward(const std::vector<DTensor>& p, const DTensor& x, const DTensor& yp,
                       const DTensor& ys, double cap) {
  using namespace reference;
  const DTensor f = Relu(AddBias(
      MatMul(Flatten(MaxPool(Relu(AddBias(Conv2d(x, p[0], true), p[1])))), p[2]), p[3]));
  const double lp = CrossEntropy(AddBias(MatMul(f, p[4]), p[5]), yp);
  const double ls = std::min(CrossEntropy(AddBias(MatMul(f, p[6]), p[7]), ys), cap);
  return {lp, ls};
}

}  // namespace

TEST_CASE("composite loss gradients match finite differences of the objective") {
  int64_t checked = 0, skipped = 0;
  for (auto mode : {SuppressionMode::kKnownGr, SuppressionMode::kKnownNegativeLoss}) {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      const TinySetup s = Tiny(seed, mode);
      Model m(s.config);
      RunBackward(m, s);
      const double lambda = s.config.lambda;
      const bool gr = mode == SuppressionMode::kKnownGr;
      const double cap = static_cast<float>(4.0 * std::log(4.0));
      const double head_cap = gr ? std::numeric_limits<double>::infinity() : cap;
      const DTensor x = DTensor::From(s.images), yp = DTensor::From(s.preserved_labels),
                    ys = DTensor::From(s.branch_labels);
      std::vector<ad::Tensor> values, grads;
      for (const auto& p : m.parameters()) {
        values.push_back(p.value);
        grads.push_back(p.grad);
      }
      REQUIRE(values.size() == 8);
      // Trunk: lambda dLp - (1 - lambda) dLs for both variants.
      auto trunk = [&](const std::vector<DTensor>& p) {
        const auto l = TinyForward(p, x, yp, ys, cap);
        return lambda * l.preserved - (1 - lambda) * l.suppressed;
      };
      auto preserved_head = [&](const std::vector<DTensor>& p) {
        return lambda * TinyForward(p, x, yp, ys, cap).preserved;
      };
      // The reversal head descends on the unclamped Ls; the negative-loss head
      // ascends on the clamped one.
      auto branch_head = [&](const std::vector<DTensor>& p) {
        return (gr ? 1.0 : -(1 - lambda)) * TinyForward(p, x, yp, ys, head_cap).suppressed;
      };
      const auto a = reference::CheckAgainstReference(
          values, grads, {true, true, true, true, false, false, false, false}, trunk);
      const auto b = reference::CheckAgainstReference(
          values, grads, {false, false, false, false, true, true, false, false}, preserved_head);
      const auto c = reference::CheckAgainstReference(
          values, grads, {false, false, false, false, false, false, true, true}, branch_head);
      for (const auto* r : {&a, &b, &c}) CHECK_MESSAGE(r->failed == 0, r->first_failure);
      checked += a.checked + b.checked + c.checked;
      skipped += a.skipped + b.skipped + c.skipped;
    }
  }
  CHECK(skipped * 50 <= checked);
}

TEST_CASE("reversal and negative-loss branches give the same trunk gradient") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const TinySetup gr = Tiny(seed, SuppressionMode::kKnownGr);
    const TinySetup neg = Tiny(seed, SuppressionMode::kKnownNegativeLoss);
    Model a(gr.config), b(neg.config);
    CHECK(ParameterBytes(a.parameters()) == ParameterBytes(b.parameters()));
    RunBackward(a, gr);
    RunBackward(b, neg);
    for (const char* name : {"conv1/w", "conv1/b", "fc/w", "fc/b", "head/preserved/w",
                             "head/preserved/b"}) {
      const auto& ga = a.parameter(name).grad;
      const auto& gb = b.parameter(name).grad;
      double diff = 0, norm = 0;
      for (int64_t i = 0; i < ga.size(); ++i) {
        diff += std::pow(static_cast<double>(ga[i]) - gb[i], 2);
        norm += std::pow(static_cast<double>(gb[i]), 2);
      }
      CHECK_MESSAGE(std::sqrt(diff) <= 1e-5 * std::sqrt(norm) + 1e-12, name);
    }
  }
}

TEST_CASE("a saturated branch stops pushing the trunk") {
  std::vector<ad::Tensor> trunk_grads;
  for (auto mode : {SuppressionMode::kKnownGr, SuppressionMode::kKnownNegativeLoss}) {
    TinySetup s = Tiny(1, mode);
    Model m(s.config);
    // Push the branch head far from its targets so CE exceeds 4 ln 4.
    auto& w = m.parameter("head/branch0/w");
    for (int64_t i = 0; i < w.value.size(); ++i) w.value[i] = 0.0f;
    auto& b = m.parameter("head/branch0/b");
    for (int64_t k = 0; k < 4; ++k) b.value[k] = 0.0f;
    for (int i = 0; i < 4; ++i) s.branch_labels[i] = 0.0f;
    b.value[1] = 40.0f;
    RunBackward(m, s);
    const float loss = m.graph().Value(m.branches()[0].loss)[0];
    double head_grad = 0;
    for (float v : b.grad.values()) head_grad += std::abs(v);
    if (mode == SuppressionMode::kKnownGr) {
      // The reversal head still sees its true loss and keeps learning.
      CHECK(loss == doctest::Approx(40.0).epsilon(1e-5));
      CHECK(head_grad > 1.0);
    } else {
      CHECK(loss == static_cast<float>(4.0 * std::log(4.0)));
      CHECK(head_grad == 0.0);
    }
    trunk_grads.push_back(m.parameter("fc/w").grad);
  }
  // Past the cap neither variant sends branch gradient into the trunk.
  const auto ga = trunk_grads[0].values(), gb = trunk_grads[1].values();
  CHECK(std::equal(ga.begin(), ga.end(), gb.begin(), gb.end()));
}

TEST_CASE("the loss cap follows loss_cap_scale") {
  TinySetup s = Tiny(1, SuppressionMode::kKnownNegativeLoss);
  s.config.loss_cap_scale = 1.0;
  Model m(s.config);
  auto& b = m.parameter("head/branch0/b");
  for (int i = 0; i < 4; ++i) s.branch_labels[i] = 0.0f;
  b.value[1] = 40.0f;
  RunBackward(m, s);
  CHECK(m.graph().Value(m.branches()[0].loss)[0] == static_cast<float>(std::log(4.0)));
  s.config.loss_cap_scale = 0.0;
  ExpectCode(ErrorCode::kInvalidConfig, [&] { s.config.Validate(); });
}

TEST_CASE("random labels") {
  Rng rng = RandomLabelStream(3, 0, 1, 0);
  const auto labels = RandomLabels(30000, 3, rng);
  std::vector<double> counts(3, 0.0);
  for (int l : labels) {
    REQUIRE(l >= 0);
    REQUIRE(l < 3);
    counts[l] += 1;
  }
  double chi2 = 0;
  for (double c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
  CHECK(chi2 < 9.2103);  // chi-square(2 dof) at p = 0.01

  Rng a = RandomLabelStream(3, 1, 4, 7), b = RandomLabelStream(3, 1, 4, 7);
  CHECK(RandomLabels(32, 4, a) == RandomLabels(32, 4, b));
  Rng c = RandomLabelStream(3, 1, 5, 7), d = RandomLabelStream(3, 1, 4, 7);
  CHECK(RandomLabels(32, 4, c) != RandomLabels(32, 4, d));
  Rng e = RandomLabelStream(3, 1, 4, 8), f = RandomLabelStream(3, 1, 4, 7);
  CHECK(RandomLabels(32, 4, e) != RandomLabels(32, 4, f));
  Rng g(1);
  ExpectCode(ErrorCode::kInvalidConfig, [&] { RandomLabels(4, 1, g); });
}

TEST_CASE("epoch order is a seeded permutation") {
  const auto o1 = EpochOrder(1, 1, 100);
  CHECK(o1 == EpochOrder(1, 1, 100));
  CHECK(o1 != EpochOrder(1, 2, 100));
  auto sorted = o1;
  std::sort(sorted.begin(), sorted.end());
  for (int64_t i = 0; i < 100; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("normalization uses train statistics") {
  ad::Tensor images = Data().train.images;
  const Normalization n = ComputeNormalization(images);
  REQUIRE(n.mean.size() == 3);
  ApplyNormalization(n, images);
  const int64_t per = images.dim(2) * images.dim(3);
  for (int64_t c = 0; c < 3; ++c) {
    double s = 0, s2 = 0;
    int64_t count = 0;
    for (int64_t i = 0; i < images.dim(0); ++i)
      for (int64_t k = 0; k < per; ++k) {
        const double v = images[(i * 3 + c) * per + k];
        s += v, s2 += v * v, ++count;
      }
    CHECK(std::abs(s / count) < 1e-4);
    CHECK(std::sqrt(s2 / count) == doctest::Approx(1.0).epsilon(1e-4));
  }
  CHECK(Normalization::FromJson(n.ToJson()) == n);
}

TEST_CASE("lambda = 1 and alpha = 0 reproduce the baseline trajectory") {
  ModelConfig base = SmallConfig();
  base.epochs = 1;
  Trainer a = MakeTrainer(base);
  const EpochLog la = a.RunEpoch();
  for (const auto& branch : {Known("color"), Random(3)}) {
    ModelConfig c = base;
    c.lambda = 1.0;  // alpha defaults to 1 - lambda = 0
    c.suppression = {branch};
    Trainer b = MakeTrainer(c);
    const EpochLog lb = b.RunEpoch();
    CHECK(lb.preserved_train_acc == la.preserved_train_acc);
    CHECK(lb.preserved_test_acc == la.preserved_test_acc);
    CHECK(lb.preserved_loss == la.preserved_loss);
    CHECK(lb.combined_loss == la.combined_loss);
    for (const auto& p : a.model().parameters()) {
      CHECK_MESSAGE(b.model().parameter(p.name).value == p.value, p.name);
    }
  }
}

TEST_CASE("logged combined loss follows the objective algebra") {
  ModelConfig c = SmallConfig();
  c.epochs = 1;
  c.lambda = 0.4;
  c.suppression = {Random(3), Known("background")};
  Trainer t = MakeTrainer(c);
  const EpochLog l = t.RunEpoch();
  REQUIRE(l.branch_losses.size() == 2);
  CHECK(std::abs(l.combined_loss -
                 (0.4 * l.preserved_loss - 0.6 * (l.branch_losses[0] + l.branch_losses[1]))) <=
        1e-6);
  for (double b : l.branch_losses) {
    CHECK(b > 0.0);
    CHECK(std::isfinite(b));
  }
  const std::string csv = FormatTrainingLog(t.history(), 2);
  CHECK(csv.rfind("epoch,preserved_train_acc,preserved_test_acc,branch_0_loss,branch_1_loss,", 0) ==
        0);
}

TEST_CASE("checkpoint round trip continues bit-exactly") {
  ModelConfig c = SmallConfig();
  c.suppression = {Random(3)};
  Trainer a = MakeTrainer(c);
  a.RunEpoch();
  const Checkpoint snap = a.Snapshot();
  const auto bytes = SerializeCheckpoint(snap);
  const Checkpoint back = ParseCheckpoint(bytes);
  CHECK(SerializeCheckpoint(back) == bytes);
  CHECK(back.config == c);
  CHECK(back.epoch == 1);

  Trainer b(back, Data().manifest.tasks, Data().train, Data().test);
  const std::vector<int64_t> rows = {5, 17, 400, 3, 999, 1259};
  const StepStats sa = a.Step(rows, 2, 0);
  const StepStats sb = b.Step(rows, 2, 0);
  CHECK(sa.objective == sb.objective);
  CHECK(ParameterBytes(a.model().parameters()) == ParameterBytes(b.model().parameters()));
  CHECK(SerializeCheckpoint(a.Snapshot()) == SerializeCheckpoint(b.Snapshot()));
}

TEST_CASE("checkpoint file errors") {
  TempDir dir("ckpt");
  ExpectCode(ErrorCode::kMissingCheckpoint, [&] { LoadCheckpoint(dir / "nope.ckpt"); });
  Trainer t = MakeTrainer(SmallConfig());
  SaveCheckpoint(dir / "a.ckpt", t.Snapshot());
  CHECK(SerializeCheckpoint(LoadCheckpoint(dir / "a.ckpt")) == SerializeCheckpoint(t.Snapshot()));
  auto bytes = ReadFileBytes(dir / "a.ckpt");
  bytes[bytes.size() - 3] ^= 0x40;
  ExpectCode(ErrorCode::kChecksumMismatch, [&] { ParseCheckpoint(bytes); });
  bytes[0] = 'X';
  ExpectCode(ErrorCode::kBadMagic, [&] { ParseCheckpoint(bytes); });
  bytes = ReadFileBytes(dir / "a.ckpt");
  bytes.resize(bytes.size() / 2);
  ExpectCode(ErrorCode::kTruncatedPayload, [&] { ParseCheckpoint(bytes); });
}

TEST_CASE("end-to-end training is deterministic and resumable") {
  ModelConfig c = SmallConfig("background");
  c.suppression = {Random(4)};
  TempDir a("run-a"), b("run-b");
  const Checkpoint best = Train(c, Data().dir.path(), a.path());
  CHECK(best.best_epoch >= 1);
  CHECK(best.best_test_acc >= 0.0);
  for (const char* f : {kBestCheckpoint, kLastCheckpoint, kTrainingLog, "config.json"}) {
    CHECK(fs::exists(a / f));
  }
  CHECK(LoadCheckpoint(a / kLastCheckpoint).epoch == 2);

  TrainOptions first;
  first.max_epochs = 1;
  Train(c, Data().dir.path(), b.path(), first);
  CHECK(LoadCheckpoint(b / kLastCheckpoint).epoch == 1);
  TrainOptions rest;
  rest.resume = true;
  Train(c, Data().dir.path(), b.path(), rest);
  for (const char* f : {kBestCheckpoint, kLastCheckpoint, kTrainingLog, "config.json"}) {
    CHECK_MESSAGE(ReadFileBytes(a / f) == ReadFileBytes(b / f), f);
  }

  ModelConfig other = c;
  other.lambda = 0.7;
  TrainOptions resume;
  resume.resume = true;
  ExpectCode(ErrorCode::kConfigMismatch, [&] { Train(other, Data().dir.path(), b.path(), resume); });
}

TEST_CASE("divergence is reported") {
  ModelConfig c = SmallConfig();
  c.lr = 1e30;
  c.epochs = 3;
  Trainer t = MakeTrainer(c);
  ExpectCode(ErrorCode::kDivergence, [&] {
    for (int e = 0; e < 3; ++e) t.RunEpoch();
  });
}

TEST_CASE("feature extraction") {
  ModelConfig c = SmallConfig();
  Trainer t = MakeTrainer(c);
  t.RunEpoch();
  const Checkpoint ck = t.Snapshot();
  const auto& d = Data();
  const FeatureTable f = ExtractFeatures(ck, d.manifest, d.dir.path(), data::Split::kTest);
  CHECK(f.rows == 1260);
  CHECK(f.cols == 16);
  CHECK(f.values.size() == 1260u * 16u);
  CHECK(f.tasks == d.manifest.tasks);
  CHECK(f.labels.size() == 5);
  CHECK(f.labels[3] == d.test.labels[3]);
  for (float v : f.values) CHECK(v >= 0.0f);  // post-relu
  CHECK(ExtractFeatures(ck, d.manifest, d.dir.path(), data::Split::kTest) == f);
  CHECK(ExtractFeatures(ck, d.test, d.manifest.tasks, data::Split::kTest).values == f.values);

  TempDir out("features");
  WriteFeatures(out / "test", f);
  CHECK(fs::exists(out / "test.f32"));
  CHECK(fs::exists(out / "test.json"));
  CHECK(ReadFeatures(out / "test") == f);
  CHECK(fs::file_size(out / "test.f32") == 1260u * 16u * 4u);

  Checkpoint broken = ck;
  broken.parameters[2].value = ad::Tensor({1});
  ExpectCode(ErrorCode::kConfigMismatch,
             [&] { ExtractFeatures(broken, d.manifest, d.dir.path(), data::Split::kTest); });
}
