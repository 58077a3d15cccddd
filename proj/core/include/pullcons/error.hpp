#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pullcons {

enum class Errc {
  InvalidConfiguration,
  MassMismatch,
  InvalidProbabilityVector,
  NoNeighbor,
  NotAnACProcess,
  TooManyColorsForExactH,
  NoClosedForm,
  EnumerationBudgetExceeded,
  NotMajorized,
  CouplingViolation,
  NoDrift,
  DomainError,
  InvalidArgument,
  ParseError,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidConfiguration: return "InvalidConfiguration";
    case Errc::MassMismatch: return "MassMismatch";
    case Errc::InvalidProbabilityVector: return "InvalidProbabilityVector";
    case Errc::NoNeighbor: return "NoNeighbor";
    case Errc::NotAnACProcess: return "NotAnACProcess";
    case Errc::TooManyColorsForExactH: return "TooManyColorsForExactH";
    case Errc::NoClosedForm: return "NoClosedForm";
    case Errc::EnumerationBudgetExceeded: return "EnumerationBudgetExceeded";
    case Errc::NotMajorized: return "NotMajorized";
    case Errc::CouplingViolation: return "CouplingViolation";
    case Errc::NoDrift: return "NoDrift";
    case Errc::DomainError: return "DomainError";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace pullcons
