#pragma once

#include <stdexcept>
#include <string>

namespace revbend {

// Every failure mode the library reports. The CLI maps these onto exit
// codes, so additions here need a corresponding entry in tools/.
enum class ErrorCode {
  ImmersionFailure,
  RootClusterError,
  NoMorseAngleFound,
  AdmissibilityViolation,
  CapCollision,
  MonotonicityLoss,
  PocketOutOfBounds,
  ConvexityConstructionFailure,
  TruncationError,
  PoleParameterError,
  StiffnessError,
  PositivityError,
  NoCountJump,
  BisectionStall,
  ClosureFailure,
  GridMismatch,
  ParseError,
  ConfigError,
  IOError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace revbend
