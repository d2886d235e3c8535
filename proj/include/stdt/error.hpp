// Copyright 2026 The STDT Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stdt {

enum class ErrorKind {
  kCoverageViolation,
  kNonIntegralDrop,
  kGridMismatch,
  kShapeMismatch,
  kTooShort,
  kNoFace,
  kEmptyCorpus,
  kNumericalFault,
  kSingleClass,
  kEmptyInput,
  kUnreachableRatio,
  kInvalidConfig,
  kIo,
  kUsage,
};

std::string_view kind_name(ErrorKind kind);

// Every failure the library reports carries a machine-readable kind; the CLI
// serializes it as {"error": kind_name, "message": what()}.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace stdt
