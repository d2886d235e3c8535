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

#include "stdt/error.hpp"

namespace stdt {

std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kCoverageViolation: return "CoverageViolation";
    case ErrorKind::kNonIntegralDrop: return "NonIntegralDrop";
    case ErrorKind::kGridMismatch: return "GridMismatch";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kTooShort: return "TooShort";
    case ErrorKind::kNoFace: return "NoFace";
    case ErrorKind::kEmptyCorpus: return "EmptyCorpus";
    case ErrorKind::kNumericalFault: return "NumericalFault";
    case ErrorKind::kSingleClass: return "SingleClass";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kUnreachableRatio: return "UnreachableRatio";
    case ErrorKind::kInvalidConfig: return "InvalidConfig";
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kUsage: return "UsageError";
  }
  return "Unknown";
}

}  // namespace stdt
