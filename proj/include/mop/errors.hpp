// mop/errors.hpp

// Copyright 2026 The mop Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MOP_ERRORS_HPP_
#define MOP_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mop {

enum class ErrorCode {
  kDimension,
  kDegenerateTemplate,
  kNonFinite,
  kNonMonotoneTime,
  kDegenerateTarget,
  kAllZeroMass,
  kParse,
  kVersion,
  kInvariant,
  kMissingSource,
  kLayoutMismatch,
  kUnknownId,
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimension: return "DimensionError";
    case ErrorCode::kDegenerateTemplate: return "DegenerateTemplate";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kNonMonotoneTime: return "NonMonotoneTime";
    case ErrorCode::kDegenerateTarget: return "DegenerateTarget";
    case ErrorCode::kAllZeroMass: return "AllZeroMass";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kVersion: return "VersionError";
    case ErrorCode::kInvariant: return "InvariantError";
    case ErrorCode::kMissingSource: return "MissingSource";
    case ErrorCode::kLayoutMismatch: return "LayoutMismatch";
    case ErrorCode::kUnknownId: return "UnknownId";
  }
  return "Error";
}

/// Base of every error raised by the engine. The code identifies the
/// failure class so callers (cli exit codes, service error events) can map
/// it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define MOP_DEFINE_ERROR(Name, Code)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string &what) : Error(Code, what) {}      \
  };

MOP_DEFINE_ERROR(DimensionError, ErrorCode::kDimension)
MOP_DEFINE_ERROR(DegenerateTemplate, ErrorCode::kDegenerateTemplate)
MOP_DEFINE_ERROR(NonFinite, ErrorCode::kNonFinite)
MOP_DEFINE_ERROR(NonMonotoneTime, ErrorCode::kNonMonotoneTime)
MOP_DEFINE_ERROR(DegenerateTarget, ErrorCode::kDegenerateTarget)
MOP_DEFINE_ERROR(AllZeroMass, ErrorCode::kAllZeroMass)
MOP_DEFINE_ERROR(VersionError, ErrorCode::kVersion)
MOP_DEFINE_ERROR(InvariantError, ErrorCode::kInvariant)
MOP_DEFINE_ERROR(MissingSource, ErrorCode::kMissingSource)
MOP_DEFINE_ERROR(LayoutMismatch, ErrorCode::kLayoutMismatch)
MOP_DEFINE_ERROR(UnknownId, ErrorCode::kUnknownId)

#undef MOP_DEFINE_ERROR

/// Parse failure with a 1-based line and field location (field 0 means the
/// whole line).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t field, const std::string &what)
      : Error(ErrorCode::kParse, "line " + std::to_string(line) + ", field " +
                                     std::to_string(field) + ": " + what),
        line_(line),
        field_(field) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::size_t field_;
};

}  // namespace mop

#endif  // MOP_ERRORS_HPP_
