#ifndef STOCHINT_ERROR_HPP_
#define STOCHINT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace stochint {

// Base class for every error raised by the library. Messages are meant to be
// shown to a user as-is (the CLI prints them on stderr).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument or precondition violation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed or unreadable input file.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A nuisance model failed to fit (single-class data, solver divergence, ...).
class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace stochint

#endif  // STOCHINT_ERROR_HPP_
