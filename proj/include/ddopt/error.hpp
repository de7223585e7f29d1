#pragma once

#include <stdexcept>
#include <string>

namespace ddopt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed problem, configuration, schedule, or file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Step size outside the range where the convergence envelopes hold.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared during an iteration.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace ddopt
