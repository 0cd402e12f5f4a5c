#pragma once

#include <stdexcept>
#include <string>

namespace dba {

enum class Err {
  BadArgument,
  BadConfig,
  BadFractions,
  DimensionMismatch,
  DomainError,
  EmptyCheckpoints,
  EmptyDataset,
  IoError,
  LengthMismatch,
  PreconditionViolation,
  StratumTooSmall,
  SupportViolation,
  UnknownAttributes,
  ZeroCountClass,
  ZeroCountGroup,
  ZeroDenominator,
};

inline const char* err_name(Err e) {
  switch (e) {
    case Err::BadArgument: return "BadArgument";
    case Err::BadConfig: return "BadConfig";
    case Err::BadFractions: return "BadFractions";
    case Err::DimensionMismatch: return "DimensionMismatch";
    case Err::DomainError: return "DomainError";
    case Err::EmptyCheckpoints: return "EmptyCheckpoints";
    case Err::EmptyDataset: return "EmptyDataset";
    case Err::IoError: return "IoError";
    case Err::LengthMismatch: return "LengthMismatch";
    case Err::PreconditionViolation: return "PreconditionViolation";
    case Err::StratumTooSmall: return "StratumTooSmall";
    case Err::SupportViolation: return "SupportViolation";
    case Err::UnknownAttributes: return "UnknownAttributes";
    case Err::ZeroCountClass: return "ZeroCountClass";
    case Err::ZeroCountGroup: return "ZeroCountGroup";
    case Err::ZeroDenominator: return "ZeroDenominator";
  }
  return "Unknown";
}

/// Library-wide exception carrying a machine-checkable error kind.
class Error : public std::runtime_error {
 public:
  Error(Err kind, const std::string& what)
      : std::runtime_error(std::string(err_name(kind)) + ": " + what), kind_(kind) {}

  Err kind() const noexcept { return kind_; }

 private:
  Err kind_;
};

[[noreturn]] inline void fail(Err kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, Err kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace dba
