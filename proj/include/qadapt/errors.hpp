#pragma once

#include <stdexcept>
#include <string>

namespace qadapt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched vector/matrix sizes between collaborating objects.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A covariance-like matrix that must be positive semi-definite is not.
class NonPsdError : public Error {
 public:
  NonPsdError(const std::string& what, double min_eigenvalue)
      : Error(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

/// Innovation covariance too badly conditioned to invert.
class IllConditionedError : public Error {
 public:
  using Error::Error;
};

/// Dynamics integration failed part way through an interval.
class PropagationError : public Error {
 public:
  using Error::Error;
};

/// Invalid scenario or campaign configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qadapt
