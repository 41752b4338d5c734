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

#ifndef OVERLEARN_COMMON_ERROR_HPP_
#define OVERLEARN_COMMON_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace overlearn {

enum class ErrorCode {
  kInvalidConfig,
  kIo,
  kShapeMismatch,
  kNotScalarLoss,
  kUndecodableImage,
  kBadMagic,
  kTruncatedPayload,
  kChecksumMismatch,
  kDivergence,
  kConfigMismatch,
  kDegenerateLabels,
  kMissingCheckpoint,
  kTooFewTasks,
  kTooFewClasses,
  kOutOfRangeCell,
  kRegistryMismatch,
  kParse,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above so
// callers (and tests) can branch on the kind of failure, not on message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace overlearn

#endif  // OVERLEARN_COMMON_ERROR_HPP_
