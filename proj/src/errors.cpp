// Copyright 2026 The derfl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "derfl/errors.hpp"

namespace derfl {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return "ConfigError";
    case ErrorKind::kSchema:
      return "SchemaError";
    case ErrorKind::kGap:
      return "GapError";
    case ErrorKind::kParse:
      return "ParseError";
    case ErrorKind::kInsufficientData:
      return "InsufficientDataError";
    case ErrorKind::kShape:
      return "ShapeError";
    case ErrorKind::kEmptyAggregation:
      return "EmptyAggregationError";
    case ErrorKind::kNumeric:
      return "NumericError";
    case ErrorKind::kAlignment:
      return "AlignmentError";
    case ErrorKind::kIo:
      return "IoError";
  }
  return "Error";
}

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kIo:
      return 1;
    case ErrorKind::kNumeric:
      return 3;
    default:
      return 2;
  }
}

}  // namespace derfl
