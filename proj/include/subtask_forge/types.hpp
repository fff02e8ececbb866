#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace subtask_forge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Column-major; for dynamics matrices entry (to, from).
using SparseMatrix = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad shapes, bad spec fields, precondition violations.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (z <= 0, q_b <= 0).
class DomainError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Argument outside an allowed range (k, alpha).
class RangeError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Numerical failure: singular or non-contractive systems, non-convergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularSystemError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace subtask_forge
