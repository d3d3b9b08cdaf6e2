#include "revbend/error.hpp"

namespace revbend {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ImmersionFailure: return "ImmersionFailure";
    case ErrorCode::RootClusterError: return "RootClusterError";
    case ErrorCode::NoMorseAngleFound: return "NoMorseAngleFound";
    case ErrorCode::AdmissibilityViolation: return "AdmissibilityViolation";
    case ErrorCode::CapCollision: return "CapCollision";
    case ErrorCode::MonotonicityLoss: return "MonotonicityLoss";
    case ErrorCode::PocketOutOfBounds: return "PocketOutOfBounds";
    case ErrorCode::ConvexityConstructionFailure:
      return "ConvexityConstructionFailure";
    case ErrorCode::TruncationError: return "TruncationError";
    case ErrorCode::PoleParameterError: return "PoleParameterError";
    case ErrorCode::StiffnessError: return "StiffnessError";
    case ErrorCode::PositivityError: return "PositivityError";
    case ErrorCode::NoCountJump: return "NoCountJump";
    case ErrorCode::BisectionStall: return "BisectionStall";
    case ErrorCode::ClosureFailure: return "ClosureFailure";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IOError: return "IOError";
  }
  return "UnknownError";
}

}  // namespace revbend
