#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wellprobe {

enum class ErrorCode {
  ParseError,
  NotSingleWell,
  DegenerateDomain,
  EnergyBelowGround,
  OutOfDomain,
  GridTooCoarse,
  WindowEmpty,
  NoConvergence,
  DegenerateCluster,
  PhaseOverflow,
  GroundRegimeHasNoTraceLimit,
  PhaseWindowTooSmall,
  EmptyObservationWindow,
  EmptyForbiddenRegion,
  PreconditionViolated,
  ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure surfaced by the library carries one of the codes above so the
// runner can print a structured error line and pick an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace wellprobe
