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

#include "overlearn/data/decoder.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "overlearn/common/error.hpp"

namespace overlearn::data {

namespace {

[[noreturn]] void Undecodable(const std::string& why) {
  throw Error(ErrorCode::kUndecodableImage, why);
}

// Area of a unit-circumradius silhouette.
double UnitArea(Shape shape) {
  const auto polygon = [](int n) {
    return 0.5 * n * std::sin(2 * std::numbers::pi / n);
  };
  switch (shape) {
    case Shape::kCircle: return std::numbers::pi;
    case Shape::kTriangle: return polygon(3);
    case Shape::kDiamond: return polygon(4);
    case Shape::kPentagon: return polygon(5);
    case Shape::kHexagon: return polygon(6);
  }
  return 0;
}

int Sides(Shape shape) {
  return shape == Shape::kCircle ? 0 : static_cast<int>(shape) + 2;
}

// Membership test for an apex-up regular n-gon via its inscribed half-planes.
bool InSilhouette(int n, double dx, double dy, double r) {
  if (n == 0) return dx * dx + dy * dy <= r * r;
  const double apothem = r * std::cos(std::numbers::pi / n);
  for (int k = 0; k < n; ++k) {
    // Outward normal of edge k points midway between vertices k and k+1.
    const double phi = -std::numbers::pi / 2 + std::numbers::pi * (2 * k + 1) / n;
    if (dx * std::cos(phi) + dy * std::sin(phi) > apothem) return false;
  }
  return true;
}

struct Blob {
  std::vector<int> pixels;  // y * side + x
  double cx = 0, cy = 0;
  int x0 = 0, x1 = 0, y0 = 0, y1 = 0;
};

Blob LargestComponent(const std::vector<uint8_t>& mask, int side, size_t& total) {
  std::vector<uint8_t> seen(mask.size(), 0);
  Blob best;
  total = 0;
  for (size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || seen[start]) continue;
    Blob blob;
    std::vector<int> stack = {static_cast<int>(start)};
    seen[start] = 1;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      blob.pixels.push_back(p);
      const int x = p % side, y = p / side;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= side || ny >= side) continue;
          const int q = ny * side + nx;
          if (mask[q] && !seen[q]) {
            seen[q] = 1;
            stack.push_back(q);
          }
        }
      }
    }
    total += blob.pixels.size();
    if (blob.pixels.size() > best.pixels.size()) best = std::move(blob);
  }
  return best;
}

struct Fit {
  double cx = 0, cy = 0, radius = 0;
  double iou = 0;
};

double SilhouetteIou(const std::vector<uint8_t>& mask, int side, const Blob& blob,
                     int n, const Fit& fit) {
  const double r = fit.radius;
  const int x0 = std::max(0, std::min(blob.x0, int(fit.cx - r)) - 2);
  const int x1 = std::min(side - 1, std::max(blob.x1, int(fit.cx + r)) + 2);
  const int y0 = std::max(0, std::min(blob.y0, int(fit.cy - r)) - 2);
  const int y1 = std::min(side - 1, std::max(blob.y1, int(fit.cy + r)) + 2);
  size_t inter = 0, uni = 0;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const bool a = mask[y * side + x];
      const bool b = InSilhouette(n, x + 0.5 - fit.cx, y + 0.5 - fit.cy, r);
      inter += a && b;
      uni += a || b;
    }
  }
  return uni ? double(inter) / double(uni) : 0.0;
}

// Grid search of centre (+/- 0.75 px) and radius (+/- 8%) around `start`.
Fit RefineFit(const std::vector<uint8_t>& mask, int side, const Blob& blob, int n,
              Fit start) {
  Fit best = start;
  for (int i = -3; i <= 3; ++i) {
    for (int j = -3; j <= 3; ++j) {
      for (int k = -8; k <= 8; ++k) {
        Fit f{start.cx + 0.25 * i, start.cy + 0.25 * j,
              start.radius * (1.0 + 0.01 * k), 0};
        f.iou = SilhouetteIou(mask, side, blob, n, f);
        if (f.iou > best.iou) best = f;
      }
    }
  }
  return best;
}

// Finer pattern search for near-ties: the centre step shrinks to 1/32 px and
// the radius step to 0.25%, recentring on the best point each round.
Fit PolishFit(const std::vector<uint8_t>& mask, int side, const Blob& blob, int n,
              Fit start) {
  Fit best = start;
  double step = 0.125, rstep = 0.01;
  for (int round = 0; round < 3 && best.iou < 1.0; ++round) {
    const Fit centre = best;
    for (int i = -4; i <= 4; ++i) {
      for (int j = -4; j <= 4; ++j) {
        for (int k = -4; k <= 4; ++k) {
          Fit f{centre.cx + step * i, centre.cy + step * j,
                centre.radius * (1.0 + rstep * k), 0};
          f.iou = SilhouetteIou(mask, side, blob, n, f);
          if (f.iou > best.iou) best = f;
        }
      }
    }
    step /= 2;
    rstep /= 2;
  }
  return best;
}

}  // namespace

VariationLabel DecodeLabel(const Image& image, const GenConfig& config) {
  const int side = image.width();
  if (side != image.height() || side != config.image_side) {
    Undecodable("image is not the configured square size");
  }
  const auto& palette = ForegroundPalette();
  VariationLabel label;

  // Background from the corners.
  const Rgb corner = image.at(0, 0);
  if (!(image.at(side - 1, 0) == corner && image.at(0, side - 1) == corner &&
        image.at(side - 1, side - 1) == corner)) {
    Undecodable("corners disagree");
  }
  int bg_palette_index = -1;
  if (corner == kWhite) {
    label.background = static_cast<int>(Background::kWhite);
  } else if (corner == kBlack) {
    label.background = static_cast<int>(Background::kBlack);
  } else {
    for (size_t i = 0; i < palette.size(); ++i) {
      if (palette[i].rgb == corner) bg_palette_index = static_cast<int>(i);
    }
    if (bg_palette_index < 0) Undecodable("background is off-palette");
    label.background = static_cast<int>(Background::kColored);
  }

  // Foreground mask and its single connected blob.
  std::vector<uint8_t> mask(static_cast<size_t>(side) * side, 0);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) mask[y * side + x] = !(image.at(x, y) == corner);
  }
  size_t total = 0;
  Blob blob = LargestComponent(mask, side, total);
  if (blob.pixels.empty()) Undecodable("no foreground");
  if (blob.pixels.size() != total) Undecodable("more than one foreground blob");

  // Foreground colour: every blob pixel must carry the same palette colour.
  const int first = blob.pixels.front();
  const Rgb fg = image.at(first % side, first / side);
  label.color = -1;
  for (size_t i = 0; i < palette.size(); ++i) {
    if (palette[i].rgb == fg) label.color = static_cast<int>(i);
  }
  if (label.color < 0) Undecodable("foreground is off-palette");
  if (label.color == bg_palette_index) Undecodable("foreground equals background");

  double sx = 0, sy = 0;
  blob.x0 = blob.y0 = side;
  blob.x1 = blob.y1 = -1;
  for (int p : blob.pixels) {
    const int x = p % side, y = p / side;
    if (!(image.at(x, y) == fg)) Undecodable("foreground is not a flat colour");
    sx += x + 0.5;
    sy += y + 0.5;
    blob.x0 = std::min(blob.x0, x);
    blob.x1 = std::max(blob.x1, x);
    blob.y0 = std::min(blob.y0, y);
    blob.y1 = std::max(blob.y1, y);
  }
  const double area = static_cast<double>(blob.pixels.size());
  blob.cx = sx / area;
  blob.cy = sy / area;

  // Location from the centroid.
  const bool left = blob.cx < side / 2.0;
  const bool upper = blob.cy < side / 2.0;
  label.location = upper ? (left ? 1 : 0) : (left ? 2 : 3);

  // Shape by silhouette fit: IoU between the blob and each candidate, first
  // at the moment estimates, then (when the call is close) after a local
  // search over centre and radius. Rasterisation is exact at pixel centres,
  // so the true shape reaches an IoU at or near 1.
  std::array<Fit, 5> fits;
  for (int s = 0; s < 5; ++s) {
    const Shape shape = static_cast<Shape>(s);
    fits[s] = {blob.cx, blob.cy, std::sqrt(area / UnitArea(shape)), 0};
    fits[s].iou = SilhouetteIou(mask, side, blob, Sides(shape), fits[s]);
  }
  auto ranked = [&] {
    std::array<int, 5> order = {0, 1, 2, 3, 4};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fits[a].iou > fits[b].iou; });
    return order;
  };
  auto order = ranked();
  if (fits[order[0]].iou < 0.97 || fits[order[0]].iou - fits[order[1]].iou < 0.03) {
    for (int s = 0; s < 5; ++s) {
      fits[s] = RefineFit(mask, side, blob, Sides(static_cast<Shape>(s)), fits[s]);
    }
    order = ranked();
    if (fits[order[0]].iou < 1.0 || fits[order[0]].iou - fits[order[1]].iou < 0.03) {
      for (int k = 0; k < 2; ++k) {
        const int s = order[k];
        fits[s] = PolishFit(mask, side, blob, Sides(static_cast<Shape>(s)), fits[s]);
      }
      order = ranked();
    }
  }
  label.shape = order[0];
  const double best_iou = fits[order[0]].iou;
  const double best_radius = fits[order[0]].radius;
  if (best_iou < 0.75) Undecodable("no silhouette fits the blob");

  // Size band from the fitted circumradius.
  const double fraction = 2 * best_radius / side;
  double best_gap = std::numeric_limits<double>::max();
  for (size_t k = 0; k < kSizeFractions.size(); ++k) {
    const double gap = std::abs(fraction - kSizeFractions[k]);
    if (gap < best_gap) {
      best_gap = gap;
      label.size = static_cast<int>(k);
    }
  }
  if (best_gap > 2 * kSizeJitter + 0.02) Undecodable("size outside every band");
  return label;
}

}  // namespace overlearn::data
