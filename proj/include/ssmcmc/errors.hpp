#ifndef SSMCMC_ERRORS_HPP
#define SSMCMC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ssmcmc {

// Bad run configuration / arguments (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (CLI exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure inside an algorithm (CLI exit code 4).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonPositiveGap : ConfigError {
  using ConfigError::ConfigError;
};

struct InvalidStart : ConfigError {
  using ConfigError::ConfigError;
};

struct EmptyMixture : ConfigError {
  using ConfigError::ConfigError;
};

struct SizeGuard : ConfigError {
  using ConfigError::ConfigError;
};

struct TooFewSamples : ConfigError {
  using ConfigError::ConfigError;
};

struct ParseError : DataError {
  using DataError::DataError;
};

struct NonMonotoneTime : DataError {
  using DataError::DataError;
};

struct DuplicateTimestamp : DataError {
  using DataError::DataError;
};

struct NotPositiveDefinite : NumericalError {
  using NumericalError::NumericalError;
};

struct NumericalBreakdown : NumericalError {
  using NumericalError::NumericalError;
};

struct ZeroVariance : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace ssmcmc

#endif
