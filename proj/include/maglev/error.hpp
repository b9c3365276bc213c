#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maglev {

enum class ErrorCode {
  InvalidArgument,
  PointOnFilament,
  NotAntiHelmholtz,
  InteriorPoint,
  ZeroFrequency,
  LoopIntersectsSphere,
  LoopInsideSphere,
  ZeroCoupling,
  InfeasibleConstraint,
  UnstableHeating,
  SingularMass,
  OnResonance,
  WireOverload,
  UnstableIntegration,
  NoDecay,
  BandTooNarrow,
  BandMismatch,
};

std::string_view error_name(ErrorCode code);

/// Numerical or contract failure raised by a core module. The message is
/// prefixed with the error name, e.g. "PointOnFilament: ...".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& detail);

inline void require(bool condition, const std::string& detail) {
  if (!condition) fail(ErrorCode::InvalidArgument, detail);
}

}  // namespace maglev
