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

#pragma once

#include <stdexcept>
#include <string>

namespace derfl {

enum class ErrorKind {
  kConfig,
  kSchema,
  kGap,
  kParse,
  kInsufficientData,
  kShape,
  kEmptyAggregation,
  kNumeric,
  kAlignment,
  kIo,
};

const char* ErrorKindName(ErrorKind kind);

// Base of every error thrown by the library. The kind drives the CLI exit
// code, so callers catching a subclass can still classify it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

#define DERFL_DEFINE_ERROR(Name, Kind)                                       \
  class Name : public Error {                                                \
   public:                                                                   \
    explicit Name(const std::string& message) : Error(Kind, message) {}     \
  };

DERFL_DEFINE_ERROR(ConfigError, ErrorKind::kConfig)
DERFL_DEFINE_ERROR(SchemaError, ErrorKind::kSchema)
DERFL_DEFINE_ERROR(GapError, ErrorKind::kGap)
DERFL_DEFINE_ERROR(ParseError, ErrorKind::kParse)
DERFL_DEFINE_ERROR(InsufficientDataError, ErrorKind::kInsufficientData)
DERFL_DEFINE_ERROR(ShapeError, ErrorKind::kShape)
DERFL_DEFINE_ERROR(EmptyAggregationError, ErrorKind::kEmptyAggregation)
DERFL_DEFINE_ERROR(NumericError, ErrorKind::kNumeric)
DERFL_DEFINE_ERROR(AlignmentError, ErrorKind::kAlignment)
DERFL_DEFINE_ERROR(IoError, ErrorKind::kIo)

#undef DERFL_DEFINE_ERROR

// 0 success, 1 configuration, 2 data, 3 numeric failure.
int ExitCodeFor(ErrorKind kind);

}  // namespace derfl
