#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "saptune/objective.hpp"
#include "saptune/sap.hpp"
#include "saptune/sketch.hpp"
#include "test_support.hpp"

using namespace saptune;

namespace {

Eigen::VectorXd singular_values(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  Eigen::VectorXd s = svd.singularValues();
  std::sort(s.begin(), s.end());
  return s;
}

DenseMatrix orthonormal_columns(std::size_t m, std::size_t n, std::uint64_t seed) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(testutil::gaussian_matrix(m, n, seed)));
  return DenseMatrix(qr.householderQ() * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)));
}

struct Instance {
  LsProblem problem;
  DenseMatrix A_hat;
  Vector Sb;
};

Instance sketched(std::size_t m, std::size_t n, std::size_t d, std::uint64_t seed, SketchKind kind = SketchKind::SJLT) {
  Instance inst{generate_problem(ProblemKind::GA, m, n, seed), {}, {}};
  const SketchOperator S = sample_operator(kind, d, m, 8, seed + 100);
  inst.A_hat = apply(S, inst.problem.A);
  inst.Sb = apply_vector(S, inst.problem.b);
  return inst;
}

SolverSettings settings(SolverKind kind, double rho) {
  SolverSettings s;
  s.solver = kind;
  s.tolerance_rho = rho;
  return s;
}

}  // namespace

TEST(Preconditioner, SketchTimesMIsOrthonormal) {
  const DenseMatrix A_hat = testutil::gaussian_matrix(40, 8, 1);
  for (PreconditionerKind kind : {PreconditionerKind::QR, PreconditionerKind::SVD}) {
    const Preconditioner P = build_preconditioner(A_hat, kind);
    EXPECT_EQ(P.rank(), 8u);
    const Eigen::MatrixXd Q = A_hat * P.dense();
    EXPECT_LE((Q.transpose() * Q - Eigen::MatrixXd::Identity(8, 8)).norm(), 1e-8 * std::sqrt(8.0));
  }
}

TEST(Preconditioner, OrthonormalSketchNeedsNoCorrection) {
  const DenseMatrix A_hat = orthonormal_columns(30, 5, 2);
  for (PreconditionerKind kind : {PreconditionerKind::QR, PreconditionerKind::SVD}) {
    const Preconditioner P = build_preconditioner(A_hat, kind);
    const Eigen::MatrixXd Q = A_hat * P.dense();
    EXPECT_LE((Q.transpose() * Q - Eigen::MatrixXd::Identity(5, 5)).norm(), 1e-12);
    EXPECT_NEAR(singular_values(P.dense()).maxCoeff(), 1.0, 1e-12);
    EXPECT_NEAR(singular_values(P.dense()).minCoeff(), 1.0, 1e-12);
  }
}

TEST(Preconditioner, SvdOfDiagonalSketch) {
  DenseMatrix A_hat = DenseMatrix::Zero(2, 2);
  A_hat(0, 0) = 2.0;
  A_hat(1, 1) = 1.0;
  const Eigen::MatrixXd M = build_preconditioner(A_hat, PreconditionerKind::SVD).dense().cwiseAbs();
  EXPECT_NEAR(M(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(M(1, 1), 1.0, 1e-15);
  EXPECT_NEAR(M(0, 1) + M(1, 0), 0.0, 1e-15);
}

TEST(Preconditioner, SingularSketch) {
  DenseMatrix A_hat = testutil::gaussian_matrix(12, 4, 3);
  A_hat.col(3) = A_hat.col(0) - A_hat.col(1);
  EXPECT_THROW(build_preconditioner(A_hat, PreconditionerKind::QR), SingularPreconditionerError);
  EXPECT_EQ(build_preconditioner(A_hat, PreconditionerKind::SVD).rank(), 3u);
  EXPECT_THROW(build_preconditioner(testutil::gaussian_matrix(3, 4, 1), PreconditionerKind::QR), std::invalid_argument);
}

TEST(Preconditioner, SpectrumMatchesSketchedBasisPseudoinverse) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const DenseMatrix A = testutil::gaussian_matrix(200, 10, seed);
    const SketchKind kind = seed % 2 ? SketchKind::LessUniform : SketchKind::SJLT;
    const SketchOperator S = sample_operator(kind, 30, 200, 4, seed + 50);
    const Eigen::MatrixXd U = testutil::range_basis(A);
    // Singular values of (SU)^+ are the reciprocals of those of SU.
    Eigen::VectorXd expected = singular_values(S.to_dense() * U).cwiseInverse();
    std::sort(expected.begin(), expected.end());
    for (PreconditionerKind pk : {PreconditionerKind::QR, PreconditionerKind::SVD}) {
      const Preconditioner P = build_preconditioner(apply(S, A), pk);
      const Eigen::VectorXd actual = singular_values(A * P.dense());
      EXPECT_LE(((actual - expected).array().abs() / expected.array()).maxCoeff(), 1e-8);
    }
  }
}

TEST(Presolve, ZeroRhsGivesZero) {
  const Instance inst = sketched(300, 10, 40, 4);
  const Preconditioner P = build_preconditioner(inst.A_hat, PreconditionerKind::QR);
  EXPECT_TRUE(presolve(P, inst.A_hat, Vector::Zero(40)).isZero(0.0));
}

TEST(Presolve, MatchesDenseLeastSquares) {
  const Instance inst = sketched(300, 10, 40, 5);
  for (PreconditionerKind kind : {PreconditionerKind::QR, PreconditionerKind::SVD}) {
    const Preconditioner P = build_preconditioner(inst.A_hat, kind);
    const Eigen::MatrixXd AM = inst.A_hat * P.dense();
    const Vector oracle = AM.colPivHouseholderQr().solve(inst.Sb);
    EXPECT_LE((presolve(P, inst.A_hat, inst.Sb) - oracle).norm(), 1e-10 * oracle.norm());
  }
}

TEST(Presolve, ConsistentSystemIsSolvedExactly) {
  LsProblem p = generate_problem(ProblemKind::GA, 400, 12, 6);
  const Vector x_bar = testutil::gaussian_vector(12, 7);
  p.b = p.A * x_bar;
  for (SapAlgorithm alg : kAllSapAlgorithms) {
    const SolveReport r = solve_sap(p, {alg, SketchKind::SJLT, 3.0, 4, 0}, 11);
    EXPECT_LE((r.x - x_bar).norm(), 1e-10 * x_bar.norm()) << to_string(alg);
  }
}

TEST(Presolve, RankDeficientSketchGivesMinimumNormSolution) {
  DenseMatrix A_hat = testutil::gaussian_matrix(20, 5, 8);
  A_hat.col(4) = A_hat.col(1) + A_hat.col(2);
  const Vector Sb = testutil::gaussian_vector(20, 9);
  const Preconditioner P = build_preconditioner(A_hat, PreconditionerKind::SVD);
  ASSERT_EQ(P.rank(), 4u);
  const Vector x = P.apply(presolve(P, A_hat, Sb));
  const Vector oracle = Eigen::MatrixXd(A_hat).completeOrthogonalDecomposition().solve(Sb);
  EXPECT_LE((x - oracle).norm(), 1e-10 * oracle.norm());
}

TEST(Presolve, InitialPointRule) {
  const Instance inst = sketched(300, 10, 40, 10);
  const Preconditioner P = build_preconditioner(inst.A_hat, PreconditionerKind::QR);
  const Vector z_sk = presolve(P, inst.A_hat, inst.Sb);
  EXPECT_TRUE(choose_initial_point(inst.problem.A, inst.problem.b, P, z_sk) == z_sk);
  // A start that is worse than zero is discarded.
  const Vector bad = -100.0 * z_sk;
  EXPECT_TRUE(choose_initial_point(inst.problem.A, inst.problem.b, P, bad).isZero(0.0));
}

TEST(Lsqr, PerfectPreconditionerConvergesImmediately) {
  const DenseMatrix A = orthonormal_columns(100, 6, 12);
  const Vector b = testutil::gaussian_vector(100, 13);
  const Preconditioner P = build_preconditioner(A, PreconditionerKind::QR);
  const SolveReport r = lsqr(A, b, P, Vector::Zero(6), settings(SolverKind::LSQR, 1e-10));
  EXPECT_LE(r.iterations, 2u);
  EXPECT_EQ(r.termination, Termination::ToleranceMet);
  const Vector x_star = direct_solve(A, b);
  EXPECT_LE((A * (r.x - x_star)).norm() / (A * r.x - b).norm(), 1e-10);
}

TEST(Lsqr, RhsOrthogonalToRangeStopsAtZero) {
  const DenseMatrix A = orthonormal_columns(50, 4, 14);
  Vector b = testutil::gaussian_vector(50, 15);
  b -= A * (A.transpose() * b);
  const Preconditioner P = build_preconditioner(A, PreconditionerKind::QR);
  const SolveReport r = lsqr(A, b, P, Vector::Zero(4), settings(SolverKind::LSQR, 1e-8));
  // (AM)^T b is rounding noise, so at most one step is taken.
  EXPECT_LE(r.iterations, 1u);
  EXPECT_EQ(r.termination, Termination::ToleranceMet);
  EXPECT_LE(r.x.norm(), 1e-12 * b.norm());
}

TEST(Lsqr, MatchesDirectSolveOnRandomProblem) {
  Instance inst = sketched(500, 20, 80, 16);
  direct_solve(inst.problem);
  for (PreconditionerKind kind : {PreconditionerKind::QR, PreconditionerKind::SVD}) {
    const Preconditioner P = build_preconditioner(inst.A_hat, kind);
    const SolveReport r = lsqr(inst.problem.A, inst.problem.b, P, Vector::Zero(20), settings(SolverKind::LSQR, 1e-10));
    EXPECT_EQ(r.termination, Termination::ToleranceMet);
    EXPECT_LE(compute_arfe(r.x, inst.problem), 1e-8);
    EXPECT_LE(r.final_test_ratio, 1e-10);
  }
}

TEST(Lsqr, FrobeniusEstimateIsMonotoneAndBounded) {
  Instance inst = sketched(500, 20, 30, 17);
  const Preconditioner P = build_preconditioner(inst.A_hat, PreconditionerKind::QR);
  const SolveReport r = lsqr(inst.problem.A, inst.problem.b, P, Vector::Zero(20), settings(SolverKind::LSQR, 1e-12));
  ASSERT_GT(r.frobenius_estimates.size(), 3u);
  const double true_fro = (inst.problem.A * P.dense()).norm();
  for (std::size_t i = 1; i < r.frobenius_estimates.size(); ++i) {
    EXPECT_GE(r.frobenius_estimates[i], r.frobenius_estimates[i - 1]);
  }
  // ||B_k||_F <= ||AM||_F holds while the Lanczos vectors stay orthogonal,
  // which in floating point is only reliable for the first few steps.
  EXPECT_LE(r.frobenius_estimates[4], true_fro * (1.0 + 1e-6));
}

TEST(Lsqr, LossIsNonIncreasing) {
  Instance inst = sketched(500, 20, 30, 18);
  const Vector x_star = direct_solve(inst.problem);
  const Preconditioner P = build_preconditioner(inst.A_hat, PreconditionerKind::SVD);
  std::vector<double> loss;
  SolverSettings s = settings(SolverKind::LSQR, 1e-12);
  s.observer = [&](std::size_t, const Vector& z) { loss.push_back((inst.problem.A * (P.apply(z) - x_star)).norm()); };
  lsqr(inst.problem.A, inst.problem.b, P, Vector::Zero(20), s);
  ASSERT_GT(loss.size(), 3u);
  for (std::size_t i = 1; i < loss.size(); ++i) EXPECT_LE(loss[i], loss[i - 1] * (1.0 + 1e-9) + 1e-13);
}

TEST(Pgd, PerfectPreconditionerNeedsOneStep) {
  const DenseMatrix A = orthonormal_columns(80, 5, 19);
  const Vector b = testutil::gaussian_vector(80, 20);
  const Preconditioner P = build_preconditioner(A, PreconditionerKind::SVD);
  const SolveReport r = pgd(A, b, P, Vector::Zero(5), settings(SolverKind::PGD, 1e-10));
  EXPECT_EQ(r.iterations, 1u);
  EXPECT_EQ(r.termination, Termination::ToleranceMet);
}

TEST(Pgd, OptimalStartStopsAtIterationZero) {
  Instance inst = sketched(300, 10, 40, 21);
  const Preconditioner P = build_preconditioner(inst.A_hat, PreconditionerKind::SVD);
  const Vector x_star = direct_solve(inst.problem);
  const Vector z_opt = (inst.problem.A * P.dense()).colPivHouseholderQr().solve(inst.problem.b);
  const SolveReport r = pgd(inst.problem.A, inst.problem.b, P, z_opt, settings(SolverKind::PGD, 1e-6));
  EXPECT_EQ(r.iterations, 0u);
  EXPECT_EQ(r.termination, Termination::PresolveExact);
  EXPECT_LE((r.x - x_star).norm(), 1e-9 * x_star.norm());
}

TEST(Pgd, NeedsAtLeastAsManyIterationsAsLsqr) {
  Instance inst = sketched(500, 20, 80, 22);
  direct_solve(inst.problem);
  const Preconditioner P = build_preconditioner(inst.A_hat, PreconditionerKind::SVD);
  const SolveReport l = lsqr(inst.problem.A, inst.problem.b, P, Vector::Zero(20), settings(SolverKind::LSQR, 1e-10));
  const SolveReport g = pgd(inst.problem.A, inst.problem.b, P, Vector::Zero(20), settings(SolverKind::PGD, 1e-6));
  const SolveReport l6 = lsqr(inst.problem.A, inst.problem.b, P, Vector::Zero(20), settings(SolverKind::LSQR, 1e-6));
  EXPECT_EQ(g.termination, Termination::ToleranceMet);
  EXPECT_LE(g.final_test_ratio, 1e-6);
  EXPECT_LE(compute_arfe(g.x, inst.problem), 10.0 * compute_arfe(l6.x, inst.problem) + 1e-12);
  EXPECT_GE(g.iterations, l6.iterations);
  EXPECT_GE(l.iterations, l6.iterations);
}

TEST(Pgd, LossDecreasesAtTheSteepestDescentRate) {
  Instance inst = sketched(500, 20, 25, 23);
  const Vector x_star = direct_solve(inst.problem);
  const Preconditioner P = build_preconditioner(inst.A_hat, PreconditionerKind::SVD);
  const Eigen::VectorXd sv = singular_values(inst.problem.A * P.dense());
  const double kappa = sv.maxCoeff() / sv.minCoeff();
  std::vector<double> loss;
  SolverSettings s = settings(SolverKind::PGD, 1e-12);
  s.observer = [&](std::size_t, const Vector& z) { loss.push_back((inst.problem.A * (P.apply(z) - x_star)).norm()); };
  pgd(inst.problem.A, inst.problem.b, P, Vector::Zero(20), s);
  ASSERT_GT(loss.size(), 3u);
  std::size_t steps = 0;
  for (std::size_t i = 1; i < loss.size() && loss[i] > 1e-10 * loss[0]; ++i) {
    EXPECT_LT(loss[i], loss[i - 1]);
    steps = i;
  }
  ASSERT_GT(steps, 0u);
  const double mean_rate = std::pow(loss[steps] / loss[0], 1.0 / static_cast<double>(steps));
  EXPECT_LE(mean_rate, (kappa * kappa - 1.0) / (kappa * kappa + 1.0) + 0.05);
}

TEST(SolveSap, DeterministicForFixedSeed) {
  const LsProblem p = generate_problem(ProblemKind::T3, 600, 15, 24);
  const Configuration c{SapAlgorithm::SVD_PGD, SketchKind::LessUniform, 2.5, 3, 1};
  const SolveReport a = solve_sap(p, c, 99);
  const SolveReport b = solve_sap(p, c, 99);
  EXPECT_TRUE(a.x == b.x);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.modeled_flops, b.modeled_flops);
  EXPECT_GT(a.wall_clock_seconds, 0.0);
}

TEST(SolveSap, ReferenceConfigurationIsAccurate) {
  LsProblem p = generate_problem(ProblemKind::GA, 2000, 40, 25);
  direct_solve(p);
  const SolveReport r = solve_sap(p, ConstantParams{}.ref_config, 1);
  EXPECT_EQ(r.termination, Termination::ToleranceMet);
  EXPECT_EQ(r.sketch_rows, 200u);
  EXPECT_LE(compute_arfe(r.x, p), 1e-4);
}

TEST(SolveSap, SafetyFactorSetsTolerance) {
  const Configuration c{SapAlgorithm::QR_LSQR, SketchKind::SJLT, 5.0, 50, 4};
  EXPECT_DOUBLE_EQ(SolverSettings::from_configuration(c).tolerance_rho, 1e-10);
  EXPECT_EQ(SolverSettings::from_configuration({SapAlgorithm::SVD_PGD, SketchKind::SJLT, 1, 1, 0}).solver,
            SolverKind::PGD);
}

TEST(SolveSap, SingularSketchIsReportedNotThrown) {
  LsProblem p = generate_problem(ProblemKind::GA, 300, 6, 26);
  p.A.col(5).setZero();
  const SolveReport r = solve_sap(p, {SapAlgorithm::QR_LSQR, SketchKind::SJLT, 2.0, 2, 0}, 3);
  EXPECT_TRUE(r.failed());
  EXPECT_TRUE(r.error.has_value());
  EXPECT_GT(r.wall_clock_seconds, 0.0);
  const SolveReport s = solve_sap(p, {SapAlgorithm::SVD_LSQR, SketchKind::SJLT, 2.0, 2, 0}, 3);
  EXPECT_FALSE(s.failed());
  EXPECT_EQ(s.preconditioner_rank, 5u);
}
