#include "vsgrasp/error.hpp"

namespace vsgrasp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::DivergedPose: return "DivergedPose";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::IllConditionedTriangulation: return "IllConditionedTriangulation";
    case ErrorCode::DegenerateBasis: return "DegenerateBasis";
    case ErrorCode::InsufficientMatches: return "InsufficientMatches";
    case ErrorCode::PointAtInfinity: return "PointAtInfinity";
    case ErrorCode::FeatureLost: return "FeatureLost";
    case ErrorCode::ScenarioInvalid: return "ScenarioInvalid";
  }
  return "Unknown";
}

}  // namespace vsgrasp
