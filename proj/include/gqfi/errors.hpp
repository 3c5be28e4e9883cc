#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gqfi {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input does not have the shape or block structure of the expected object.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A covariance matrix with a symplectic eigenvalue below one.
class UnphysicalStateError : public Error {
 public:
  using Error::Error;
};

/// Eigen-solver failure, singular matrix, negative discriminant and the like.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A method's precondition on the state does not hold; another method applies.
class ApplicabilityError : public Error {
 public:
  using Error::Error;
};

/// A formula that needs every symplectic eigenvalue above one met a pure mode.
class PurityError : public ApplicabilityError {
 public:
  using ApplicabilityError::ApplicabilityError;
};

/// The requested derivative cannot be computed reliably (e.g. FD of S across a
/// degenerate symplectic spectrum).
class UnsupportedDerivativeError : public ApplicabilityError {
 public:
  using ApplicabilityError::ApplicabilityError;
};

/// Second derivatives of the symplectic eigenvalues are needed but missing.
class InsufficientDerivativesError : public ApplicabilityError {
 public:
  using ApplicabilityError::ApplicabilityError;
};

/// An iterative procedure hit its cap before reaching the requested accuracy.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : Error(what), achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

/// Argument outside the operation's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Every candidate method of an automatic dispatch failed.
class DispatchError : public Error {
 public:
  DispatchError(const std::string& what, std::vector<std::string> failures)
      : Error(what), failures_(std::move(failures)) {}
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::vector<std::string> failures_;
};

}  // namespace gqfi
