#pragma once

#include <stdexcept>
#include <string>

namespace spinlets {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A caller passed an argument outside the documented domain.
class ArgumentError : public Error {
  public:
    using Error::Error;
};

/// Malformed input text (CSV rows, JSON documents).
class ParseError : public Error {
  public:
    using Error::Error;
};

/// Required column or field is missing.
class SchemaError : public ParseError {
  public:
    using ParseError::ParseError;
};

/// Input rows disagree with each other (e.g. two responses for one replicate).
class ConsistencyError : public ParseError {
  public:
    using ParseError::ParseError;
};

/// A numeric routine produced a non-finite value.
class NumericalError : public Error {
  public:
    using Error::Error;
};

/// Shapes of cooperating objects do not match; indicates a library bug or misuse.
class InternalError : public Error {
  public:
    using Error::Error;
};

[[noreturn]] void throw_argument(const std::string& what);

}  // namespace spinlets
