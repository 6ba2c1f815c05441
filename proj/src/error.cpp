#include "wellprobe/error.hpp"

namespace wellprobe {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NotSingleWell: return "NotSingleWell";
    case ErrorCode::DegenerateDomain: return "DegenerateDomain";
    case ErrorCode::EnergyBelowGround: return "EnergyBelowGround";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::WindowEmpty: return "WindowEmpty";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DegenerateCluster: return "DegenerateCluster";
    case ErrorCode::PhaseOverflow: return "PhaseOverflow";
    case ErrorCode::GroundRegimeHasNoTraceLimit: return "GroundRegimeHasNoTraceLimit";
    case ErrorCode::PhaseWindowTooSmall: return "PhaseWindowTooSmall";
    case ErrorCode::EmptyObservationWindow: return "EmptyObservationWindow";
    case ErrorCode::EmptyForbiddenRegion: return "EmptyForbiddenRegion";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace wellprobe
