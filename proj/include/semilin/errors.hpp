#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semilin {

// Exit-code mapping in the CLI: InputError/ConfigError -> 1,
// HypothesisError -> 2, NonConvergence -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed user input: dimension mismatch, schema violations, bad sequences.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid or incomplete configuration (empty grids, missing enclosing radius).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure did not terminate (step caps, bisection caps).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A standing hypothesis of the solver failed (gamma0 = 0, sign of F, ...).
class HypothesisError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : InputError(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Raised by expression evaluation: missing bindings and math domain errors.
class EvalError : public Error {
 public:
  using Error::Error;
};

}  // namespace semilin
