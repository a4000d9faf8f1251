#include "mobnet/error.hpp"

namespace mobnet {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RowSumViolation: return "RowSumViolation";
    case ErrorCode::NegativeOffDiagonal: return "NegativeOffDiagonal";
    case ErrorCode::Reducible: return "Reducible";
    case ErrorCode::SingularSolve: return "SingularSolve";
    case ErrorCode::TolTooSmall: return "TolTooSmall";
    case ErrorCode::EpsOutOfRange: return "EpsOutOfRange";
    case ErrorCode::HorizonExceeded: return "HorizonExceeded";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::ZeroHorizon: return "ZeroHorizon";
    case ErrorCode::EventBudgetExceeded: return "EventBudgetExceeded";
    case ErrorCode::EmptyTagNode: return "EmptyTagNode";
    case ErrorCode::UnstableParams: return "UnstableParams";
    case ErrorCode::CycleBudgetExceeded: return "CycleBudgetExceeded";
    case ErrorCode::InsufficientCycles: return "InsufficientCycles";
    case ErrorCode::LevelNeverReached: return "LevelNeverReached";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::NanInput: return "NanInput";
    case ErrorCode::ZeroAlpha: return "ZeroAlpha";
    case ErrorCode::StepTooCoarse: return "StepTooCoarse";
    case ErrorCode::RhoOutOfRange: return "RhoOutOfRange";
    case ErrorCode::VLessThanU: return "VLessThanU";
    case ErrorCode::NotDiagonalizable: return "NotDiagonalizable";
    case ErrorCode::DegenerateU: return "DegenerateU";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::DimensionUnsupported: return "DimensionUnsupported";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::TagUnavailable: return "TagUnavailable";
    case ErrorCode::HorizonTooShort: return "HorizonTooShort";
  }
  return "Unknown";
}

}  // namespace mobnet
