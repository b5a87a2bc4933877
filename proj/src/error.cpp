#include "perpetua/error.hpp"

namespace perpetua {

std::string_view to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::InvalidParameter: return "InvalidParameter";
  case ErrorCode::InfiniteMean: return "InfiniteMean";
  case ErrorCode::UnsupportedAlpha: return "UnsupportedAlpha";
  case ErrorCode::RowSumError: return "RowSumError";
  case ErrorCode::SelfLoopError: return "SelfLoopError";
  case ErrorCode::NotIrreducible: return "NotIrreducible";
  case ErrorCode::MissingSojournLaw: return "MissingSojournLaw";
  case ErrorCode::NeverHits: return "NeverHits";
  case ErrorCode::OutOfRange: return "OutOfRange";
  case ErrorCode::InfiniteVarianceSuspected: return "InfiniteVarianceSuspected";
  case ErrorCode::NonConvergent: return "NonConvergent";
  case ErrorCode::MomentDiverges: return "MomentDiverges";
  case ErrorCode::NoSignChange: return "NoSignChange";
  case ErrorCode::NotCritical: return "NotCritical";
  case ErrorCode::NotStable: return "NotStable";
  case ErrorCode::NotDivergent: return "NotDivergent";
  case ErrorCode::EmptyHeavySet: return "EmptyHeavySet";
  case ErrorCode::NotConstantA: return "NotConstantA";
  case ErrorCode::NonPositiveB: return "NonPositiveB";
  case ErrorCode::DomainError: return "DomainError";
  case ErrorCode::CaseMismatch: return "CaseMismatch";
  case ErrorCode::TooSmall: return "TooSmall";
  case ErrorCode::NonPositive: return "NonPositive";
  case ErrorCode::DegenerateSample: return "DegenerateSample";
  case ErrorCode::ParseError: return "ParseError";
  case ErrorCode::ValidationError: return "ValidationError";
  case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string &message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

void fail(ErrorCode code, const std::string &message) {
  throw Error(code, message);
}

} // namespace perpetua
