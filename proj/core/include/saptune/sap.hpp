#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "saptune/common.hpp"
#include "saptune/paramspace.hpp"
#include "saptune/problems.hpp"

namespace saptune {

enum class PreconditionerKind { QR, SVD };

/// Right preconditioner M built from a sketch A_hat = S A so that A_hat M has
/// orthonormal columns. QR keeps R and applies M = R^{-1} by triangular
/// solves; SVD materialises M = V_k Sigma_k^{-1} over the numerical rank k.
class Preconditioner {
 public:
  PreconditionerKind kind() const { return kind_; }
  /// Number of columns of M (the dimension of the preconditioned variable z).
  std::size_t rank() const { return rank_; }
  /// Number of rows of M (columns of A).
  std::size_t cols() const { return cols_; }

  Vector apply(const Vector& z) const;            // M z
  Vector apply_transpose(const Vector& x) const;  // M^T x
  Eigen::MatrixXd dense() const;

  /// argmin_z ||A_hat M z - Sb|| = Q_k^T Sb, where Q_k spans range(A_hat).
  Vector presolve(const Vector& Sb) const;

  /// Orthonormal basis of range(A_hat) from the stored factorisation.
  const Eigen::MatrixXd& range_basis() const { return basis_; }

  /// Modelled flop count of the factorisation and of one apply/apply_transpose.
  double build_flops() const { return build_flops_; }
  double apply_flops() const;

  friend Preconditioner build_preconditioner(const DenseMatrix& A_hat, PreconditionerKind kind);

 private:
  PreconditionerKind kind_ = PreconditionerKind::QR;
  std::size_t rank_ = 0;
  std::size_t cols_ = 0;
  Eigen::MatrixXd factor_;  // R (n x n, upper) for QR; M (n x k) for SVD
  Eigen::MatrixXd basis_;   // thin Q (d x n) or U_k (d x k)
  double build_flops_ = 0.0;
};

/// Throws std::invalid_argument if A_hat has fewer rows than columns and
/// SingularPreconditionerError when QR's R has a diagonal entry below 1e-12
/// of the largest.
Preconditioner build_preconditioner(const DenseMatrix& A_hat, PreconditionerKind kind);

/// Sketch-and-solve start z_sk from the stored factorisation, O(d k).
Vector presolve(const Preconditioner& precond, const DenseMatrix& A_hat, const Vector& Sb);

/// Start at z_sk when ||A M z_sk - b||^2 < ||b||^2, otherwise at zero.
Vector choose_initial_point(const DenseMatrix& A, const Vector& b, const Preconditioner& precond, const Vector& z_sk);

enum class SolverKind { LSQR, PGD };
enum class Termination { ToleranceMet, IterationLimit, PresolveExact, Failed };

std::string_view to_string(Termination t);

struct SolverSettings {
  double tolerance_rho = 1e-6;
  /// 0 selects the default of 4 * A.cols().
  std::size_t max_iterations = 0;
  SolverKind solver = SolverKind::LSQR;
  /// Called with (iteration, z) for the starting point and after every update.
  std::function<void(std::size_t, const Vector&)> observer;

  static SolverSettings from_configuration(const Configuration& config, std::size_t max_iterations = 0);
};

struct SolveReport {
  Vector x;
  Vector z;
  double wall_clock_seconds = 0.0;
  std::size_t iterations = 0;
  Termination termination = Termination::IterationLimit;
  double arfe = std::numeric_limits<double>::quiet_NaN();
  /// Frobenius-norm estimate ||AM||_EF used by the final stopping test.
  double frobenius_estimate_final = 0.0;
  /// LSQR's running estimate, one entry per iteration (empty for PGD).
  std::vector<double> frobenius_estimates;
  /// ||(AM)^T r|| / (||AM||_EF ||r||) evaluated with the true residual at exit.
  double final_test_ratio = 0.0;
  /// Deterministic operation-count model of the whole run.
  double modeled_flops = 0.0;
  std::size_t sketch_rows = 0;
  std::size_t preconditioner_rank = 0;
  std::optional<std::string> error;

  bool failed() const { return termination == Termination::Failed; }
};

/// Preconditioned LSQR on min ||A M z - b|| started at z0. Only the
/// inconsistent-system stopping rule is used.
SolveReport lsqr(const DenseMatrix& A, const Vector& b, const Preconditioner& precond, const Vector& z0,
                 const SolverSettings& settings);

/// Preconditioned steepest descent with exact line search, stopping rule with
/// ||AM||_EF = sqrt(n).
SolveReport pgd(const DenseMatrix& A, const Vector& b, const Preconditioner& precond, const Vector& z0,
                const SolverSettings& settings);

struct SapOptions {
  std::size_t max_iterations = 0;
  std::function<void(std::size_t, const Vector&)> observer;
};

/// Sketch rows for a configuration: round(sampling_factor * n), at least 1.
std::size_t sketch_rows(const Configuration& config, std::size_t n);

/// End-to-end sketch-and-precondition solve. Preconditioner singularity is
/// reported through termination == Failed with the elapsed time, never thrown.
SolveReport solve_sap(const LsProblem& problem, const Configuration& config, std::uint64_t seed,
                      const SapOptions& options = {});

}  // namespace saptune
