#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace weakiv {

enum class ErrorKind {
  InvalidInput,
  DimensionMismatch,
  NonPositiveDefinite,
  SingularMap,
  DegenerateDirection,
  InsufficientDraws,
  InvalidWeight,
  DegenerateDenominator,
  DegenerateGamma,
  NoRootFound,
  SingularFoc,
  Infeasible,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// True for errors caused by malformed input rather than numerical failure.
bool is_validation_error(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace weakiv
