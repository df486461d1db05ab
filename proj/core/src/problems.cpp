#include "saptune/problems.hpp"

#include <cmath>
#include <random>

#include "saptune/rng.hpp"

namespace saptune {

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::GA: return "GA";
    case ProblemKind::T5: return "T5";
    case ProblemKind::T3: return "T3";
    case ProblemKind::T1: return "T1";
  }
  return "?";
}

ProblemKind parse_problem_kind(std::string_view text) {
  if (text == "GA") return ProblemKind::GA;
  if (text == "T5") return ProblemKind::T5;
  if (text == "T3") return ProblemKind::T3;
  if (text == "T1") return ProblemKind::T1;
  throw std::invalid_argument("unknown problem kind '" + std::string(text) + "' (expected GA, T5, T3 or T1)");
}

int degrees_of_freedom(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::GA: return 0;
    case ProblemKind::T5: return 5;
    case ProblemKind::T3: return 3;
    case ProblemKind::T1: return 1;
  }
  return 0;
}

DenseMatrix synthetic_covariance(std::size_t n) {
  DenseMatrix sigma(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double lag = std::abs(static_cast<double>(i) - static_cast<double>(j));
      sigma(i, j) = 2.0 * std::pow(0.5, lag);
    }
  }
  return sigma;
}

Vector planted_solution(std::size_t n) {
  Vector x = Vector::Ones(static_cast<Eigen::Index>(n));
  if (n < 20) return x;
  for (std::size_t i = 10; i + 10 < n; ++i) x(static_cast<Eigen::Index>(i)) = 0.1;
  return x;
}

LsProblem generate_problem(ProblemKind kind, std::size_t m, std::size_t n, std::uint64_t seed) {
  if (n < 1 || m < n) {
    throw std::invalid_argument("generate_problem requires m >= n >= 1 (got m=" + std::to_string(m) +
                                ", n=" + std::to_string(n) + ")");
  }
  Rng rng = make_rng(seed, Stream::Problem);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int df = degrees_of_freedom(kind);
  std::chi_squared_distribution<double> chi2(df > 0 ? df : 1);

  // The covariance 2 * 0.5^|i-j| is that of a stationary AR(1) chain, so its
  // Cholesky factor applied to iid normals reduces to this recursion.
  const double lead = std::sqrt(2.0);
  const double innovation = std::sqrt(2.0 * (1.0 - 0.25));

  LsProblem problem;
  problem.A.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < problem.A.rows(); ++i) {
    double prev = lead * normal(rng);
    problem.A(i, 0) = prev;
    for (Eigen::Index j = 1; j < problem.A.cols(); ++j) {
      prev = 0.5 * prev + innovation * normal(rng);
      problem.A(i, j) = prev;
    }
    if (df > 0) {
      const double scale = std::sqrt(chi2(rng) / df);
      problem.A.row(i) /= scale;
    }
  }

  const Vector x = planted_solution(n);
  problem.b = problem.A * x;
  for (Eigen::Index i = 0; i < problem.b.size(); ++i) problem.b(i) += kNoiseStddev * normal(rng);
  problem.label = std::string(to_string(kind));
  problem.seed = seed;
  return problem;
}

LsProblem make_problem(DenseMatrix A, Vector b, std::string label) {
  if (A.rows() < 1 || A.cols() < 1 || A.rows() < A.cols()) {
    throw std::invalid_argument("least-squares matrix must satisfy m >= n >= 1");
  }
  if (b.size() != A.rows()) {
    throw std::invalid_argument("right-hand side length " + std::to_string(b.size()) +
                                " does not match matrix rows " + std::to_string(A.rows()));
  }
  if (!A.allFinite() || !b.allFinite()) throw std::invalid_argument("problem data contains non-finite entries");
  LsProblem problem;
  problem.A = std::move(A);
  problem.b = std::move(b);
  problem.label = std::move(label);
  return problem;
}

MatrixDiagnostics diagnostics(const DenseMatrix& A) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (n < 1 || m < n) throw std::invalid_argument("diagnostics requires m >= n >= 1");

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(R);
  const Vector& sigma = svd.singularValues();
  const double tol = sigma(0) * static_cast<double>(m) * std::numeric_limits<double>::epsilon();
  if (!(sigma(n - 1) > tol)) throw RankDeficientError("diagnostics: matrix is rank deficient");

  // Rows of the thin Q span the same row-norm profile as the left singular vectors.
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(m, n);
  const double max_leverage = Q.rowwise().squaredNorm().maxCoeff();

  MatrixDiagnostics out;
  out.coherence_mu = static_cast<double>(m) * max_leverage;
  out.coherence_normalized = max_leverage;
  out.condition_number = sigma(0) / sigma(n - 1);
  return out;
}

Vector direct_solve(const DenseMatrix& A, const Vector& b) {
  if (b.size() != A.rows()) throw std::invalid_argument("direct_solve: dimension mismatch");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < A.cols()) throw RankDeficientError("direct_solve: matrix is rank deficient");
  const auto diag = qr.matrixR().diagonal().cwiseAbs();
  if (diag.minCoeff() < 1e-10 * diag.maxCoeff()) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.solve(b);
  }
  return qr.solve(b);
}

const Vector& direct_solve(LsProblem& problem) {
  if (!problem.x_star) problem.x_star = direct_solve(problem.A, problem.b);
  return *problem.x_star;
}

}  // namespace saptune
