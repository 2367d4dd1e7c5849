#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sensing {

enum class ErrorKind {
  MalformedRow,
  MalformedRecord,
  NonMonotonicTime,
  BBoxOutOfFrame,
  DegenerateBBox,
  EmptyStream,
  MissingFile,
  MissingData,
  InvalidManifest,
  NoHazardDetected,
  NeverLooked,
  UnknownField,
  InvariantViolation,
  NegativeInterval,
  InvalidGazeAtOnset,
  StationaryVehicle,
  NoTelemetryAtOnset,
  NonPositiveResolution,
  EmptyData,
  TooFewPoints,
  EmptyGroup,
  DegenerateGroup,
  DegenerateCohort,
  DegenerateResponse,
  RankDeficientDesign,
  MissingCovariate,
  SampleSizeOutOfRange,
  ZeroVariance,
  NonConvergence,
  DomainError,
  InvalidSpec,
  InvalidConfig,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the toolkit; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace sensing
