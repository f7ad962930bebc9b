#pragma once

#include <stdexcept>
#include <string>

namespace gt {

enum class ErrorCode {
  // geometry
  DegenerateSvd,
  // attitude
  DegenerateBaseline,
  ParallelVectors,
  SingularSystem,
  NonConvergence,
  // time sync
  TooFewSamples,
  InsufficientOverlap,
  FlatSignal,
  // alignment
  DegenerateGeometry,
  NonMonotonicResult,
  // magnetometer calibration
  DegenerateFit,
  IllConditioned,
  // marker field
  DisconnectedMarker,
  NoKnownMarkers,
  // ingestion
  ParseError,
  NonMonotonicTime,
  MissingColumn,
  ConfigError,
  // vibration
  WindowTooLong,
  NoPeak,
  RankDeficient,
  TauOutOfRange,
};

const char* error_code_name(ErrorCode code);

// Thrown by all library operations on contract violations. code() identifies
// the failure class so callers can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gt
