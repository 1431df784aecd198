#include "mfl/error.hpp"

namespace mfl {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::NonNumericCell: return "NonNumericCell";
    case Errc::NonPositiveValue: return "NonPositiveValue";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::InvalidSize: return "InvalidSize";
    case Errc::NotAGrid: return "NotAGrid";
    case Errc::TooFewLevels: return "TooFewLevels";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::Empty: return "Empty";
    case Errc::WeightMismatch: return "WeightMismatch";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::DidNotConverge: return "DidNotConverge";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::EmptyGrid: return "EmptyGrid";
    case Errc::AllTargetWeightZero: return "AllTargetWeightZero";
    case Errc::EnsembleEmpty: return "EnsembleEmpty";
    case Errc::NonPositiveInput: return "NonPositiveInput";
    case Errc::InvalidRange: return "InvalidRange";
    case Errc::InvalidGrid: return "InvalidGrid";
    case Errc::TooShort: return "TooShort";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::Io: return "Io";
    case Errc::Schema: return "Schema";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

ErrorCategory category(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidParams:
    case Errc::EmptyGrid:
    case Errc::InvalidRange:
    case Errc::InvalidGrid:
    case Errc::InvalidSize:
    case Errc::TooFewLevels:
    case Errc::TooShort:
    case Errc::InvalidConfig:
      return ErrorCategory::Config;
    case Errc::DidNotConverge:
    case Errc::EnsembleEmpty:
    case Errc::AllTargetWeightZero:
      return ErrorCategory::Numerical;
    default:
      return ErrorCategory::Data;
  }
}

}  // namespace mfl
