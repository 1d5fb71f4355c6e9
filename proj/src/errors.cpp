// Copyright (c) 2026 vspan authors
// SPDX-License-Identifier: Apache-2.0
#include "vspan/errors.hpp"

namespace vspan {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLine:
      return "MalformedLine";
    case ErrorCode::UnknownEventName:
      return "UnknownEventName";
    case ErrorCode::MissingField:
      return "MissingField";
    case ErrorCode::FieldOutOfRange:
      return "FieldOutOfRange";
    case ErrorCode::MissingHeader:
      return "MissingHeader";
    case ErrorCode::UnsortedFile:
      return "UnsortedFile";
    case ErrorCode::EmptyExperiment:
      return "EmptyExperiment";
    case ErrorCode::OverflowedTimestamp:
      return "OverflowedTimestamp";
    case ErrorCode::BackwardsTime:
      return "BackwardsTime";
    case ErrorCode::OutOfRange:
      return "OutOfRange";
    case ErrorCode::UnknownAttribute:
      return "UnknownAttribute";
    case ErrorCode::NondeterministicMatch:
      return "NondeterministicMatch";
    case ErrorCode::DuplicateOpenSocket:
      return "DuplicateOpenSocket";
    case ErrorCode::NoMatchingSubsystem:
      return "NoMatchingSubsystem";
    case ErrorCode::UnlinkedCall:
      return "UnlinkedCall";
    case ErrorCode::IncompleteSpan:
      return "IncompleteSpan";
    case ErrorCode::UnsupportedFormat:
      return "UnsupportedFormat";
    case ErrorCode::UnresolvedService:
      return "UnresolvedService";
    case ErrorCode::CycleDetected:
      return "CycleDetected";
    case ErrorCode::MalformedTopology:
      return "MalformedTopology";
    case ErrorCode::IoError:
      return "IoError";
  }
  return "Error";
}

}  // namespace vspan
