#include "optsurr/errors.hpp"

namespace optsurr {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::NonBinaryArm: return "NonBinaryArm";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ArmTooSmall: return "ArmTooSmall";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidParameters: return "InvalidParameters";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::EmptyNeighborhood: return "EmptyNeighborhood";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::TwoSidedD0: return "TwoSidedD0";
    case ErrorCode::DegenerateK2: return "DegenerateK2";
    case ErrorCode::OutOfSupport: return "OutOfSupport";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::TooManyExcluded: return "TooManyExcluded";
    case ErrorCode::NullPrimaryEffect: return "NullPrimaryEffect";
    case ErrorCode::EstimatorFailure: return "EstimatorFailure";
    case ErrorCode::FoldTooSmall: return "FoldTooSmall";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::NullMarginalEffect: return "NullMarginalEffect";
    case ErrorCode::StudyFailure: return "StudyFailure";
    case ErrorCode::InfeasibleTarget: return "InfeasibleTarget";
    case ErrorCode::NonpositiveSurrogateEffect: return "NonpositiveSurrogateEffect";
    case ErrorCode::NoFeasibleN: return "NoFeasibleN";
  }
  return "Unknown";
}

ErrorCategory error_category(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingColumn:
    case ErrorCode::MissingValue:
    case ErrorCode::NonBinaryArm:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::ArmTooSmall:
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidParameters:
    case ErrorCode::MalformedInput:
      return ErrorCategory::Input;
    case ErrorCode::InfeasibleTarget:
    case ErrorCode::NonpositiveSurrogateEffect:
    case ErrorCode::NoFeasibleN:
      return ErrorCategory::Infeasible;
    default:
      return ErrorCategory::Numeric;
  }
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_name(code)) + ": " + detail), code_(code) {}

}  // namespace optsurr
