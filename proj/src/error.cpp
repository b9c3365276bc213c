#include "maglev/error.hpp"

namespace maglev {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::PointOnFilament: return "PointOnFilament";
    case ErrorCode::NotAntiHelmholtz: return "NotAntiHelmholtz";
    case ErrorCode::InteriorPoint: return "InteriorPoint";
    case ErrorCode::ZeroFrequency: return "ZeroFrequency";
    case ErrorCode::LoopIntersectsSphere: return "LoopIntersectsSphere";
    case ErrorCode::LoopInsideSphere: return "LoopInsideSphere";
    case ErrorCode::ZeroCoupling: return "ZeroCoupling";
    case ErrorCode::InfeasibleConstraint: return "InfeasibleConstraint";
    case ErrorCode::UnstableHeating: return "UnstableHeating";
    case ErrorCode::SingularMass: return "SingularMass";
    case ErrorCode::OnResonance: return "OnResonance";
    case ErrorCode::WireOverload: return "WireOverload";
    case ErrorCode::UnstableIntegration: return "UnstableIntegration";
    case ErrorCode::NoDecay: return "NoDecay";
    case ErrorCode::BandTooNarrow: return "BandTooNarrow";
    case ErrorCode::BandMismatch: return "BandMismatch";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_name(code)) + ": " + detail), code_(code) {}

void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace maglev
