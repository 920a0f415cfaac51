#pragma once

#include <stdexcept>
#include <string>

namespace mtjfp {

enum class Errc {
  InvalidArgument,
  ZeroCriticalCurrent,
  StepRejected,
  NonFiniteState,
  BadGrading,
  PoleEvaluation,
  SolverSingular,
  NegativeMass,
  NotNormalized,
  ExpmFailure,
  SolverDiverged,
  NoBracket,
  InsufficientWalks,
  BudgetExhausted,
  CalibrationNoCross,
  IncompleteCalibration,
  Config,
};

const char* to_string(Errc code);

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  Errc code() const noexcept { return code_; }
  /// Message without the code prefix, for re-wrapping.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace mtjfp
