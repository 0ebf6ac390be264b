// Copyright 2026 The nl2vi Authors.
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nl2vi {

/// Base of every domain error raised by the library. Contract violations
/// (wrong backend role, malformed arguments) use std::invalid_argument.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  /// Stable identifier used in HTTP error bodies and run summaries.
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define NL2VI_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

// backend-gateway
NL2VI_DEFINE_ERROR(BackendUnavailable)
NL2VI_DEFINE_ERROR(FixtureMiss)
NL2VI_DEFINE_ERROR(InvalidBackendResponse)

// question-filter / verifier / metrics
NL2VI_DEFINE_ERROR(MismatchedSets)
NL2VI_DEFINE_ERROR(EmptyBatch)
NL2VI_DEFINE_ERROR(NoPositives)
NL2VI_DEFINE_ERROR(EmptyInput)
NL2VI_DEFINE_ERROR(SetViolation)

// corpus-store
NL2VI_DEFINE_ERROR(IoError)
NL2VI_DEFINE_ERROR(VersionMismatch)
NL2VI_DEFINE_ERROR(InvalidRating)
NL2VI_DEFINE_ERROR(NotAssigned)
NL2VI_DEFINE_ERROR(DuplicateAnnotation)
NL2VI_DEFINE_ERROR(StorageError)

// pipeline-service
NL2VI_DEFINE_ERROR(ConfigError)
NL2VI_DEFINE_ERROR(DatasetError)
NL2VI_DEFINE_ERROR(BindError)

#undef NL2VI_DEFINE_ERROR

enum class ParseErrorKind { missing_prompt, no_questions, malformed_line };

const char* to_string(ParseErrorKind kind) noexcept;

/// Raised by the synthesis-output parser.
class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, std::size_t line_no, const std::string& detail);

  ParseErrorKind parse_kind() const noexcept { return parse_kind_; }
  /// 1-based line of the offending input; 0 when not line-specific.
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  ParseErrorKind parse_kind_;
  std::size_t line_no_;
};

/// All synthesis attempts produced unparseable output.
class SynthesisFailed : public Error {
 public:
  SynthesisFailed(const ParseError& last, int attempts);

  const ParseError& last_error() const noexcept { return last_; }
  int attempts() const noexcept { return attempts_; }

 private:
  ParseError last_;
  int attempts_;
};

/// A dataset line violated the record schema.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line_no, std::string field, const std::string& detail);

  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_no_;
  std::string field_;
};

class DuplicateId : public Error {
 public:
  DuplicateId(std::string id, std::vector<std::size_t> lines);

  const std::string& id() const noexcept { return id_; }
  const std::vector<std::size_t>& lines() const noexcept { return lines_; }

 private:
  std::string id_;
  std::vector<std::size_t> lines_;
};

}  // namespace nl2vi
