#include "weakiv/errors.hpp"

namespace weakiv {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonPositiveDefinite: return "NonPositiveDefinite";
    case ErrorKind::SingularMap: return "SingularMap";
    case ErrorKind::DegenerateDirection: return "DegenerateDirection";
    case ErrorKind::InsufficientDraws: return "InsufficientDraws";
    case ErrorKind::InvalidWeight: return "InvalidWeight";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorKind::DegenerateGamma: return "DegenerateGamma";
    case ErrorKind::NoRootFound: return "NoRootFound";
    case ErrorKind::SingularFoc: return "SingularFoc";
    case ErrorKind::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

bool is_validation_error(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::InsufficientDraws:
    case ErrorKind::InvalidWeight:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace weakiv
