#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mobnet {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  // mobility
  RowSumViolation,
  NegativeOffDiagonal,
  Reducible,
  SingularSolve,
  TolTooSmall,
  EpsOutOfRange,
  HorizonExceeded,
  // network
  InvalidParams,
  ZeroHorizon,
  EventBudgetExceeded,
  EmptyTagNode,
  UnstableParams,
  CycleBudgetExceeded,
  InsufficientCycles,
  // paths
  LevelNeverReached,
  EmptyGrid,
  // reference laws
  NanInput,
  ZeroAlpha,
  StepTooCoarse,
  RhoOutOfRange,
  VLessThanU,
  // martingale lab
  NotDiagonalizable,
  DegenerateU,
  QuadratureFailure,
  DimensionUnsupported,
  ZeroDenominator,
  // experiments
  Config,
  TagUnavailable,
  HorizonTooShort,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mobnet
