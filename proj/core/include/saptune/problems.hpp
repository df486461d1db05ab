#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "saptune/common.hpp"

namespace saptune {

/// Row distribution of a synthetic test matrix: Gaussian or multivariate t
/// with 5, 3 or 1 degrees of freedom.
enum class ProblemKind { GA, T5, T3, T1 };

std::string_view to_string(ProblemKind kind);
ProblemKind parse_problem_kind(std::string_view text);

/// Degrees of freedom of the multivariate t rows; 0 for Gaussian.
int degrees_of_freedom(ProblemKind kind);

/// Overdetermined least-squares instance min ||Ax - b||.
struct LsProblem {
  DenseMatrix A;
  Vector b;
  std::optional<Vector> x_star;
  std::string label = "custom";
  std::uint64_t seed = 0;

  std::size_t rows() const { return static_cast<std::size_t>(A.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(A.cols()); }
};

struct MatrixDiagnostics {
  double coherence_mu = 0.0;          // m * max_i ||U_(i)||^2, in [n, m]
  double coherence_normalized = 0.0;  // coherence_mu / m, in [n/m, 1]
  double condition_number = 0.0;
};

/// Covariance of the synthetic rows: Sigma_ij = 2 * 0.5^|i-j|.
DenseMatrix synthetic_covariance(std::size_t n);

/// Planted solution: ones in the first and last ten entries, 0.1 elsewhere.
/// Falls back to all ones when n < 20.
Vector planted_solution(std::size_t n);

/// Noise standard deviation of b = A x + eps.
inline constexpr double kNoiseStddev = 0.09;

/// Draws a synthetic problem. Bit-reproducible for fixed arguments.
/// Throws std::invalid_argument unless m >= n >= 1.
LsProblem generate_problem(ProblemKind kind, std::size_t m, std::size_t n, std::uint64_t seed);

/// Wraps user data as a problem. Throws std::invalid_argument on shape mismatch
/// or non-finite entries.
LsProblem make_problem(DenseMatrix A, Vector b, std::string label = "custom");

/// Coherence and 2-norm condition number. Throws RankDeficientError when A does
/// not have full column rank.
MatrixDiagnostics diagnostics(const DenseMatrix& A);

/// Dense least-squares reference solve (column-pivoted QR, SVD fallback when
/// nearly singular). The result is cached on the problem.
const Vector& direct_solve(LsProblem& problem);

/// Stateless variant of direct_solve.
Vector direct_solve(const DenseMatrix& A, const Vector& b);

// Binary container: "SAPLSQ01", u64 m, u64 n, u64 label length, label bytes,
// u64 seed, then A row-major and b, all little-endian doubles.
void save_problem(const LsProblem& problem, const std::filesystem::path& path);
LsProblem load_problem(const std::filesystem::path& path);

/// Reads a dense matrix from whitespace- or comma-separated text, one row per
/// line. Lines starting with '#' are skipped.
DenseMatrix read_dense_text(const std::filesystem::path& path);

/// Imports (A, b) from text. Without a separate rhs file the last column of
/// the matrix file is taken as b.
LsProblem import_problem_text(const std::filesystem::path& matrix_path,
                              const std::optional<std::filesystem::path>& rhs_path = std::nullopt);

}  // namespace saptune
