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

#ifndef OVERLEARN_DATA_DECODER_HPP_
#define OVERLEARN_DATA_DECODER_HPP_

#include "overlearn/data/generator.hpp"
#include "overlearn/data/image.hpp"
#include "overlearn/data/task.hpp"

namespace overlearn::data {

// Recovers all five labels of a rendered sample by pixel analysis alone:
//   background  - the four corner pixels, matched to white/black/palette;
//   colour      - nearest palette entry of the foreground pixels;
//   location    - quadrant holding the foreground centroid;
//   shape       - best silhouette fit among the five shapes, each fitted at
//                 the centroid with the radius implied by the pixel area;
//   size        - the fitted circumradius, matched to the nearest band.
// Throws undecodable-image when the picture violates the rendering contract
// (no foreground, several blobs, off-palette colours, no convincing fit).
VariationLabel DecodeLabel(const Image& image, const GenConfig& config);

}  // namespace overlearn::data

#endif  // OVERLEARN_DATA_DECODER_HPP_
