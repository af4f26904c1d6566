// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reunite {

enum class ErrorCode {
  DimensionMismatch,
  InvalidObservation,
  StoreCorrupt,
  UnknownEntry,
  UnknownSpecies,
  TooShort,
  SampleRateTooLow,
  NoVoicedFrames,
  SpeciesMismatch,
  EmptyObservations,
  NegativeDuration,
  ClockSkew,
  NoUsableModality,
  EmptyGallery,
  InvalidConfig,
  InvalidDuration,
  MissingTruth,
  InvalidTau,
  ParseError,
  IoError,
  AlreadyResolved,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidObservation: return "InvalidObservation";
    case ErrorCode::StoreCorrupt: return "StoreCorrupt";
    case ErrorCode::UnknownEntry: return "UnknownEntry";
    case ErrorCode::UnknownSpecies: return "UnknownSpecies";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::SampleRateTooLow: return "SampleRateTooLow";
    case ErrorCode::NoVoicedFrames: return "NoVoicedFrames";
    case ErrorCode::SpeciesMismatch: return "SpeciesMismatch";
    case ErrorCode::EmptyObservations: return "EmptyObservations";
    case ErrorCode::NegativeDuration: return "NegativeDuration";
    case ErrorCode::ClockSkew: return "ClockSkew";
    case ErrorCode::NoUsableModality: return "NoUsableModality";
    case ErrorCode::EmptyGallery: return "EmptyGallery";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidDuration: return "InvalidDuration";
    case ErrorCode::MissingTruth: return "MissingTruth";
    case ErrorCode::InvalidTau: return "InvalidTau";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::AlreadyResolved: return "AlreadyResolved";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (CLI, HTTP layer, tests) can branch on the kind without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace reunite
