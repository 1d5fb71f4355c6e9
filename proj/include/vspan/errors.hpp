// Copyright (c) 2026 vspan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vspan {

// One error vocabulary for the whole pipeline. Each failure carries the
// code plus whatever location detail was available (field name, line).
enum class ErrorCode {
  MalformedLine,
  UnknownEventName,
  MissingField,
  FieldOutOfRange,
  MissingHeader,
  UnsortedFile,
  EmptyExperiment,
  OverflowedTimestamp,
  BackwardsTime,
  OutOfRange,
  UnknownAttribute,
  NondeterministicMatch,
  DuplicateOpenSocket,
  NoMatchingSubsystem,
  UnlinkedCall,
  IncompleteSpan,
  UnsupportedFormat,
  UnresolvedService,
  CycleDetected,
  MalformedTopology,
  IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string field = {},
        std::int64_t line = -1)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        message_(std::move(message)),
        field_(std::move(field)),
        line_(line) {}

  ErrorCode code() const { return code_; }
  const std::string& message() const { return message_; }  // without code prefix
  const std::string& field() const { return field_; }
  std::int64_t line() const { return line_; }  // 1-based; -1 when n/a

 private:
  ErrorCode code_;
  std::string message_;
  std::string field_;
  std::int64_t line_;
};

}  // namespace vspan
