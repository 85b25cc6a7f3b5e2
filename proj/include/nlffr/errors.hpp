#pragma once

#include <stdexcept>
#include <string>

namespace nlffr {

// Base for every error raised by the library. The CLI maps the concrete
// subclasses onto exit codes (validation 1, numerical 2, I/O 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input or configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A factorization or solve failed; with a positive ridge this means the
// inputs carried NaN/Inf or were otherwise corrupted.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlffr
