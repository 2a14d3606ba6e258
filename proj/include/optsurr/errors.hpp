#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace optsurr {

enum class ErrorCode {
  // input problems
  MissingColumn,
  MissingValue,
  NonBinaryArm,
  NonFiniteValue,
  ArmTooSmall,
  InvalidConfig,
  InvalidParameters,
  MalformedInput,
  // numerical problems
  DegenerateSample,
  EmptyNeighborhood,
  NoOverlap,
  TwoSidedD0,
  DegenerateK2,
  OutOfSupport,
  SingularSystem,
  TooManyExcluded,
  NullPrimaryEffect,
  EstimatorFailure,
  FoldTooSmall,
  SingularDesign,
  NullMarginalEffect,
  StudyFailure,
  // infeasible requests
  InfeasibleTarget,
  NonpositiveSurrogateEffect,
  NoFeasibleN,
};

enum class ErrorCategory { Input = 1, Numeric = 2, Infeasible = 3 };

std::string_view error_name(ErrorCode code) noexcept;
ErrorCategory error_category(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return error_category(code_); }
  int exit_code() const noexcept { return static_cast<int>(category()); }

 private:
  ErrorCode code_;
};

}  // namespace optsurr
