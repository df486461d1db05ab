#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace saptune {

/// Row-major dense matrix; the storage order the sketch kernels assume.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Raised when a matrix that must have full column rank does not.
class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the QR preconditioner's triangular factor is numerically singular.
class SingularPreconditionerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the ARFE denominator ||Ax - b|| vanishes.
class DegenerateResidualError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace saptune
