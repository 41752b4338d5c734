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
#include <set>
#include <vector>

#include "doctest.h"
#include "overlearn/common/error.hpp"
#include "overlearn/common/io.hpp"
#include "overlearn/data/decoder.hpp"
#include "overlearn/data/generator.hpp"
#include "overlearn/data/image.hpp"
#include "overlearn/data/manifest.hpp"
#include "overlearn/data/task.hpp"
#include "temp_dir.hpp"

using namespace overlearn;
using namespace overlearn::data;

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

// Independent checks of the rendering contract, written against pixels only.
struct PixelFacts {
  Rgb corner;
  bool corners_agree = true;
  Rgb dominant;          // most frequent non-corner colour
  int colours = 0;       // distinct colours in the image
  double cx = 0, cy = 0; // centroid of the dominant colour
  int extent = 0;        // max(bbox width, bbox height) of the dominant colour
};

PixelFacts Inspect(const Image& img) {
  PixelFacts f;
  const int s = img.width();
  f.corner = img.at(0, 0);
  for (auto [x, y] : {std::pair{s - 1, 0}, {0, s - 1}, {s - 1, s - 1}}) {
    f.corners_agree &= img.at(x, y) == f.corner;
  }
  std::vector<std::pair<Rgb, int>> counts;
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x) {
      const Rgb c = img.at(x, y);
      auto it = std::find_if(counts.begin(), counts.end(), [&](auto& p) { return p.first == c; });
      if (it == counts.end()) counts.push_back({c, 1}); else ++it->second;
    }
  f.colours = static_cast<int>(counts.size());
  int best = 0;
  for (auto& [c, n] : counts)
    if (!(c == f.corner) && n > best) best = n, f.dominant = c;
  int x0 = s, x1 = -1, y0 = s, y1 = -1;
  double sx = 0, sy = 0;
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x)
      if (img.at(x, y) == f.dominant) {
        sx += x + 0.5, sy += y + 0.5;
        x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
      }
  f.cx = sx / best;
  f.cy = sy / best;
  f.extent = std::max(x1 - x0 + 1, y1 - y0 + 1);
  return f;
}

// The narrowest of the five shapes (a triangle, vertex up) spans sqrt(3)/2 of
// its circumscribed diameter; the widest spans all of it.
void CheckContract(const VariationLabel& l, const Image& img, int side) {
  const PixelFacts f = Inspect(img);
  CHECK(f.corners_agree);
  CHECK(f.colours == 2);
  const Rgb fg = ForegroundPalette()[l.color].rgb;
  CHECK(f.dominant == fg);
  switch (static_cast<Background>(l.background)) {
    case Background::kWhite: CHECK(f.corner == kWhite); break;
    case Background::kBlack: CHECK(f.corner == kBlack); break;
    case Background::kColored: {
      CHECK_FALSE(f.corner == fg);
      bool in_palette = false;
      for (const auto& c : ForegroundPalette()) in_palette |= c.rgb == f.corner;
      CHECK(in_palette);
      break;
    }
  }
  const bool right = f.cx > side / 2.0, top = f.cy < side / 2.0;
  const int quadrant = top ? (right ? 0 : 1) : (right ? 3 : 2);
  CHECK(quadrant == l.location);
  const double lo = std::sqrt(3.0) / 2 * (kSizeFractions[l.size] - kSizeJitter) * side - 2;
  const double hi = (kSizeFractions[l.size] + kSizeJitter) * side + 1;
  CHECK(f.extent >= lo);
  CHECK(f.extent <= hi);
}

VariationLabel Label(Shape s, int color, SizeClass z, Quadrant q, Background b) {
  return {static_cast<int>(s), color, static_cast<int>(z), static_cast<int>(q),
          static_cast<int>(b)};
}

}  // namespace

TEST_CASE("task registry") {
  const auto& r = PreserveTaskRegistry();
  REQUIRE(r.size() == 5);
  const char* names[] = {"shape", "color", "size", "location", "background"};
  for (size_t t = 0; t < 5; ++t) {
    CHECK(r[t].name == names[t]);
    CHECK(r[t].num_classes() == static_cast<size_t>(kPreserveTaskClassCounts[t]));
    CHECK(std::set<std::string>(r[t].class_names.begin(), r[t].class_names.end()).size() ==
          r[t].num_classes());
    CHECK_NOTHROW(ValidateTask(r[t]));
  }
  ExpectCode(ErrorCode::kInvalidConfig, [] { ValidateTask({"dup", {"a", "a"}}); });
  ExpectCode(ErrorCode::kInvalidConfig, [] { ValidateTask({"empty", {}}); });
  ExpectCode(ErrorCode::kParse, [&] { r[0].ClassIndex("octagon"); });
}

TEST_CASE("variation enumeration is a bijection onto the label product") {
  CHECK(kNumVariations == 1260);
  std::set<std::array<int, 5>> seen;
  for (int v = 0; v < kNumVariations; ++v) {
    const VariationLabel l = VariationFromIndex(v);
    CHECK(l.IsValid());
    CHECK(VariationIndex(l) == v);
    seen.insert(l.AsArray());
  }
  CHECK(seen.size() == 1260);
}

TEST_CASE("palette colours are pairwise at least 60 RGB units apart") {
  std::vector<Rgb> colours = {kWhite, kBlack};
  for (const auto& c : ForegroundPalette()) colours.push_back(c.rgb);
  for (size_t i = 0; i < colours.size(); ++i)
    for (size_t j = i + 1; j < colours.size(); ++j) {
      const double d = std::sqrt(std::pow(colours[i].r - colours[j].r, 2) +
                                 std::pow(colours[i].g - colours[j].g, 2) +
                                 std::pow(colours[i].b - colours[j].b, 2));
      CHECK(d >= 60.0);
      CHECK(RgbDistance(colours[i], colours[j]) == doctest::Approx(d));
    }
}

TEST_CASE("config validation") {
  GenConfig c;
  CHECK_NOTHROW(c.Validate());
  c.image_side = 31;
  ExpectCode(ErrorCode::kInvalidConfig, [&] { c.Validate(); });
  c = {};
  c.train_per_variation = 0;
  ExpectCode(ErrorCode::kInvalidConfig, [&] { c.Validate(); });
  c = {};
  c.test_per_variation = 0;
  ExpectCode(ErrorCode::kInvalidConfig, [&] { c.Validate(); });
  c = {};
  c.jitter = 0.26;
  ExpectCode(ErrorCode::kInvalidConfig, [&] { c.Validate(); });
  c = {};
  c.seed = 42;
  c.image_side = 64;
  CHECK(GenConfig::FromJson(c.ToJson()) == c);
}

TEST_CASE("rendered samples satisfy the pixel contract") {
  for (int side : {64, 256}) {
    GenConfig c;
    c.image_side = side;
    SUBCASE("circle, blue, medium, quadrant 2, white") {
      const auto l = Label(Shape::kCircle, 2, SizeClass::kMedium, Quadrant::kQ2, Background::kWhite);
      Rng rng = SampleStream(0, VariationIndex(l), Split::kTrain, 0);
      const Image img = RenderSample(l, c, rng);
      CHECK(img.width() == side);
      CHECK(img.height() == side);
      CheckContract(l, img, side);
    }
    SUBCASE("hexagon, red, large, quadrant 4, black") {
      const auto l = Label(Shape::kHexagon, 6, SizeClass::kLarge, Quadrant::kQ4, Background::kBlack);
      Rng rng = SampleStream(0, VariationIndex(l), Split::kTest, 3);
      CheckContract(l, RenderSample(l, c, rng), side);
    }
    SUBCASE("every label, several instances") {
      for (int v = 0; v < kNumVariations; ++v) {
        const VariationLabel l = VariationFromIndex(v);
        for (int i = 0; i < 3; ++i) {
          Rng rng = SampleStream(7, v, Split::kTrain, i);
          CheckContract(l, RenderSample(l, c, rng), side);
        }
      }
    }
  }
}

TEST_CASE("decode inverts render for every label at 64 px") {
  GenConfig c;
  c.image_side = 64;
  int wrong = 0;
  for (int v = 0; v < kNumVariations; ++v) {
    Rng rng = SampleStream(c.seed, v, Split::kTrain, 0);
    if (!(DecodeLabel(RenderSample(VariationFromIndex(v), c, rng), c) == VariationFromIndex(v))) {
      ++wrong;
    }
  }
  CHECK(wrong == 0);
}

TEST_CASE("decoder rejects images that break the contract") {
  GenConfig c;
  c.image_side = 64;
  ExpectCode(ErrorCode::kUndecodableImage, [&] { DecodeLabel(Image(64, 64, kWhite), c); });
  Image two(64, 64, kWhite);
  for (int y = 5; y < 15; ++y)
    for (int x = 5; x < 15; ++x) two.set(x, y, ForegroundPalette()[0].rgb), two.set(x + 40, y + 40, ForegroundPalette()[0].rgb);
  ExpectCode(ErrorCode::kUndecodableImage, [&] { DecodeLabel(two, c); });
}

TEST_CASE("png round trip") {
  Rng rng(1);
  Image img(33, 17);
  for (int y = 0; y < 17; ++y)
    for (int x = 0; x < 33; ++x)
      img.set(x, y, {static_cast<uint8_t>(rng.Below(256)), static_cast<uint8_t>(rng.Below(256)),
                     static_cast<uint8_t>(rng.Below(256))});
  const auto bytes = EncodePng(img);
  CHECK(DecodePng(bytes) == img);
  CHECK(EncodePng(img) == bytes);
}

TEST_CASE("generation: counts, balance, determinism") {
  GenConfig c;
  c.image_side = 32;
  c.train_per_variation = 1;
  c.test_per_variation = 1;
  c.seed = 99;
  TempDir a("gen-a"), b("gen-b");
  const Manifest m = GenerateDataset(c, a.path());
  CHECK(m.Count(Split::kTrain) == 1260);
  CHECK(m.Count(Split::kTest) == 1260);
  std::set<std::vector<int>> distinct;
  for (const auto* row : m.Rows(Split::kTrain)) distinct.insert(row->labels);
  CHECK(distinct.size() == 1260);
  for (Split s : {Split::kTrain, Split::kTest}) {
    for (size_t t = 0; t < m.tasks.size(); ++t) {
      const auto hist = m.ClassHistogram(t, s);
      for (size_t k : hist) CHECK(k == 1260 / m.tasks[t].num_classes());
    }
  }
  for (const auto& row : m.rows) CHECK(std::filesystem::exists(a.path() / row.path));
  CHECK(ReadManifest(a / kManifestFileName) == m);
  CHECK(GenConfig::FromJson(m.generator) == c);

  const Manifest m2 = GenerateDataset(c, b.path());
  CHECK(m2 == m);
  CHECK(ReadFileBytes(a / kManifestFileName) == ReadFileBytes(b / kManifestFileName));
  for (const auto& row : m.rows) {
    if (row.instance != 0) continue;
    REQUIRE(FileFingerprint(a.path() / row.path) == FileFingerprint(b.path() / row.path));
  }

  // Stored pixels decode back to the manifest labels.
  for (size_t r = 0; r < m.rows.size(); r += 97) {
    const Image img = ReadPng(a.path() / m.rows[r].path);
    CHECK(img.width() == 32);
    CheckContract(VariationFromIndex([&] {
                    const auto& l = m.rows[r].labels;
                    return VariationIndex({l[0], l[1], l[2], l[3], l[4]});
                  }()),
                  img, 32);
  }
}

TEST_CASE("manifest text round trip and parse errors") {
  Manifest m;
  m.tasks = {{"shape", {"circle", "square"}}, {"color", {"red", "green", "blue"}}};
  m.generator = {{"kind", "test"}};
  m.rows = {{"train/a.png", Split::kTrain, {0, 2}, 0}, {"test/b.png", Split::kTest, {1, 1}, 4}};
  const std::string text = FormatManifest(m);
  CHECK(text.find("path,split,shape,color,instance\n") != std::string::npos);
  CHECK(text.find("train/a.png,train,circle,blue,0\n") != std::string::npos);
  CHECK(ParseManifest(text) == m);
  ExpectCode(ErrorCode::kParse, [] { ParseManifest("path,split\n"); });
  std::string bad = text;
  bad.replace(bad.find("blue"), 4, "teal");
  ExpectCode(ErrorCode::kParse, [&] { ParseManifest(bad); });
}

TEST_CASE("random streams") {
  CHECK(DeriveSeed(1, "dropout", 2, 3) == DeriveSeed(1, "dropout", 2, 3));
  CHECK(DeriveSeed(1, "dropout", 2, 3) != DeriveSeed(1, "dropout", 3, 2));
  CHECK(DeriveSeed(1, "a") != DeriveSeed(2, "a"));
  Rng a = Rng::Stream(5, "x", 1), b = Rng::Stream(5, "x", 1);
  for (int i = 0; i < 100; ++i) CHECK(a.NextU64() == b.NextU64());
  Rng c(3);
  for (int i = 0; i < 1000; ++i) {
    const uint64_t v = c.Below(7);
    CHECK(v < 7);
    const double u = c.Uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  Rng d(9);
  d.NextU64();
  const std::string state = d.SaveState();
  const uint64_t next = d.NextU64();
  Rng e(0);
  e.LoadState(state);
  CHECK(e.NextU64() == next);
}
