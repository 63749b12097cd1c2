#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ramcf {

enum class ErrorCode {
  NonPositiveCoefficient,
  NotHyperbolic,
  NotElliptic,
  PoleDerivative,
  PoleOnBoundary,
  OutOfRange,
  NotPeriodic,
  RInOrbit,
  ExceptionalR,
  NoAdmissibleR,
  StageNotHyperbolic,
  DegenerateSlope,
  WrongOrientation,
  NotEnoughConvergents,
  PowerCapExceeded,
  CauchyViolation,
  InvalidArgument,
  InvalidScenario,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveCoefficient: return "NonPositiveCoefficient";
    case ErrorCode::NotHyperbolic: return "NotHyperbolic";
    case ErrorCode::NotElliptic: return "NotElliptic";
    case ErrorCode::PoleDerivative: return "PoleDerivative";
    case ErrorCode::PoleOnBoundary: return "PoleOnBoundary";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::NotPeriodic: return "NotPeriodic";
    case ErrorCode::RInOrbit: return "RInOrbit";
    case ErrorCode::ExceptionalR: return "ExceptionalR";
    case ErrorCode::NoAdmissibleR: return "NoAdmissibleR";
    case ErrorCode::StageNotHyperbolic: return "StageNotHyperbolic";
    case ErrorCode::DegenerateSlope: return "DegenerateSlope";
    case ErrorCode::WrongOrientation: return "WrongOrientation";
    case ErrorCode::NotEnoughConvergents: return "NotEnoughConvergents";
    case ErrorCode::PowerCapExceeded: return "PowerCapExceeded";
    case ErrorCode::CauchyViolation: return "CauchyViolation";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace ramcf
