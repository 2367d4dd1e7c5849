#include "sensing/error.hpp"

namespace sensing {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorKind::BBoxOutOfFrame: return "BBoxOutOfFrame";
    case ErrorKind::DegenerateBBox: return "DegenerateBBox";
    case ErrorKind::EmptyStream: return "EmptyStream";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::MissingData: return "MissingData";
    case ErrorKind::InvalidManifest: return "InvalidManifest";
    case ErrorKind::NoHazardDetected: return "NoHazardDetected";
    case ErrorKind::NeverLooked: return "NeverLooked";
    case ErrorKind::UnknownField: return "UnknownField";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::NegativeInterval: return "NegativeInterval";
    case ErrorKind::InvalidGazeAtOnset: return "InvalidGazeAtOnset";
    case ErrorKind::StationaryVehicle: return "StationaryVehicle";
    case ErrorKind::NoTelemetryAtOnset: return "NoTelemetryAtOnset";
    case ErrorKind::NonPositiveResolution: return "NonPositiveResolution";
    case ErrorKind::EmptyData: return "EmptyData";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::EmptyGroup: return "EmptyGroup";
    case ErrorKind::DegenerateGroup: return "DegenerateGroup";
    case ErrorKind::DegenerateCohort: return "DegenerateCohort";
    case ErrorKind::DegenerateResponse: return "DegenerateResponse";
    case ErrorKind::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorKind::MissingCovariate: return "MissingCovariate";
    case ErrorKind::SampleSizeOutOfRange: return "SampleSizeOutOfRange";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace sensing
