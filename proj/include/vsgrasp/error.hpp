#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vsgrasp {

enum class ErrorCode {
  InvalidArgument,
  NonPositiveDepth,
  SingularJacobian,
  DivergedPose,
  BehindCamera,
  DegenerateConfiguration,
  IllConditionedTriangulation,
  DegenerateBasis,
  InsufficientMatches,
  PointAtInfinity,
  FeatureLost,
  ScenarioInvalid,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (and tests) can branch on the condition rather than the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vsgrasp
