#pragma once

#include <stdexcept>
#include <string>

namespace perfseer {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Syntax error with a 1-based source position.
class ParseError : public Error {
public:
  ParseError(size_t line, size_t col, const std::string& msg)
      : Error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
        line(line), col(col) {}
  size_t line;
  size_t col;
};

/// Violated kernel invariant, bad transform argument, type conflict.
class SemanticError : public Error {
public:
  using Error::Error;
};

/// Symbolic counting failure (unresolved divisibility, non-rectangular
/// footprint, undecidable comparison). The numeric oracle remains available.
class CountError : public Error {
public:
  using Error::Error;
};

/// Feature or model evaluation failure.
class EvalError : public Error {
public:
  using Error::Error;
};

}  // namespace perfseer
