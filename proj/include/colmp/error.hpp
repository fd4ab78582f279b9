#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace colmp {

enum class ErrorCode {
  MissingColumn,
  MalformedRow,
  NonNumericCell,
  NegativeRatio,
  InvalidCategory,
  DuplicateId,
  BLessThanA,
  InsufficientRows,
  ZeroRange,
  NonFiniteInput,
  InvalidFeatures,
  DimensionMismatch,
  LengthMismatch,
  SingularMatrix,
  ZeroResidualVariance,
  KTooLarge,
  KOutOfRange,
  EmptyGrid,
  FactorizationFailed,
  DivergenceDetected,
  SingleClassData,
  ZeroVariance,
  EmptyBin,
  UnsupportedVersion,
  CorruptPayload,
  ArityMismatch,
  UnknownModel,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::NegativeRatio: return "NegativeRatio";
    case ErrorCode::InvalidCategory: return "InvalidCategory";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::BLessThanA: return "BLessThanA";
    case ErrorCode::InsufficientRows: return "InsufficientRows";
    case ErrorCode::ZeroRange: return "ZeroRange";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::InvalidFeatures: return "InvalidFeatures";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::ZeroResidualVariance: return "ZeroResidualVariance";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::KOutOfRange: return "KOutOfRange";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::FactorizationFailed: return "FactorizationFailed";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::SingleClassData: return "SingleClassData";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::EmptyBin: return "EmptyBin";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::CorruptPayload: return "CorruptPayload";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

// All library failures are reported through this type. The code is stable and
// machine-readable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace colmp
