#ifndef PERPETUA_ERROR_HPP
#define PERPETUA_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace perpetua {

enum class ErrorCode {
  InvalidParameter,
  InfiniteMean,
  UnsupportedAlpha,
  RowSumError,
  SelfLoopError,
  NotIrreducible,
  MissingSojournLaw,
  NeverHits,
  OutOfRange,
  InfiniteVarianceSuspected,
  NonConvergent,
  MomentDiverges,
  NoSignChange,
  NotCritical,
  NotStable,
  NotDivergent,
  EmptyHeavySet,
  NotConstantA,
  NonPositiveB,
  DomainError,
  CaseMismatch,
  TooSmall,
  NonPositive,
  DegenerateSample,
  ParseError,
  ValidationError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind rather than the message.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message);

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string &message);

} // namespace perpetua

#endif // PERPETUA_ERROR_HPP
