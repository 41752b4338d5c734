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

#include "overlearn/common/error.hpp"

namespace overlearn {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kIo: return "io-error";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kNotScalarLoss: return "not-a-scalar-loss";
    case ErrorCode::kUndecodableImage: return "undecodable-image";
    case ErrorCode::kBadMagic: return "bad-magic";
    case ErrorCode::kTruncatedPayload: return "truncated-payload";
    case ErrorCode::kChecksumMismatch: return "checksum-mismatch";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kConfigMismatch: return "config-mismatch";
    case ErrorCode::kDegenerateLabels: return "degenerate-labels";
    case ErrorCode::kMissingCheckpoint: return "missing-checkpoint";
    case ErrorCode::kTooFewTasks: return "too-few-tasks";
    case ErrorCode::kTooFewClasses: return "too-few-classes";
    case ErrorCode::kOutOfRangeCell: return "out-of-range-cell";
    case ErrorCode::kRegistryMismatch: return "registry-mismatch";
    case ErrorCode::kParse: return "parse-error";
  }
  return "unknown";
}

}  // namespace overlearn
