#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace maxent {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user configuration (support parameters, basis definition, schema).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Invalid data passed to an operation (empty sample, mismatched sizes).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Sample values that fall outside the configured support.
class OutOfSupportError : public InputError {
 public:
  OutOfSupportError(const std::string& what, std::vector<std::size_t> rows)
      : InputError(what), rows_(std::move(rows)) {}
  const std::vector<std::size_t>& rows() const noexcept { return rows_; }

 private:
  std::vector<std::size_t> rows_;
};

/// A density is positive where the reference density vanishes.
class SupportMismatchError : public InputError {
 public:
  using InputError::InputError;
};

/// Non-finite value encountered during quadrature.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, double node)
      : Error(what), node_(node) {}
  double node() const noexcept { return node_; }

 private:
  double node_;
};

/// Moment vector for which no maximum entropy density exists.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double grad_norm, int iterations)
      : Error(what), grad_norm_(grad_norm), iterations_(iterations) {}
  double grad_norm() const noexcept { return grad_norm_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double grad_norm_;
  int iterations_;
};

/// Covariance / Hessian too close to singular to invert.
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, std::vector<double> eigenvalues)
      : Error(what), eigenvalues_(std::move(eigenvalues)) {}
  const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }

 private:
  std::vector<double> eigenvalues_;
};

/// Rejection sampler with an acceptance rate too low to be usable.
class EnvelopeError : public Error {
 public:
  using Error::Error;
};

}  // namespace maxent
