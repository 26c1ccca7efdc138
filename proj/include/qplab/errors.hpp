// Exception taxonomy. Every failure mode the engine can certify carries its
// own type so callers (and the CLI exit-code mapping) can tell numerical
// failures from caller errors without parsing messages.
#pragma once

#include <stdexcept>
#include <string>

namespace qplab {

// Caller-side errors: bad arguments, malformed config, invalid brackets.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct BadBracket : DomainError {
  explicit BadBracket(const std::string& msg) : DomainError(msg) {}
};

struct WindowViolation : DomainError {
  explicit WindowViolation(const std::string& msg) : DomainError(msg) {}
};

// Numerical failures: the computation ran but could not certify its result.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonConvergence : NumericalError {
  explicit NonConvergence(const std::string& msg) : NumericalError(msg) {}
};

struct ConeViolation : NumericalError {
  explicit ConeViolation(const std::string& msg) : NumericalError(msg) {}
};

struct QuadratureNotConverged : NumericalError {
  explicit QuadratureNotConverged(const std::string& msg)
      : NumericalError(msg) {}
};

struct DegenerateFit : NumericalError {
  explicit DegenerateFit(const std::string& msg) : NumericalError(msg) {}
};

}  // namespace qplab
