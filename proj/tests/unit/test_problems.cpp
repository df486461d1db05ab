#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "saptune/problems.hpp"
#include "test_support.hpp"

using namespace saptune;

TEST(GenerateProblem, IsBitReproducible) {
  const LsProblem a = generate_problem(ProblemKind::T3, 300, 12, 42);
  const LsProblem b = generate_problem(ProblemKind::T3, 300, 12, 42);
  const LsProblem c = generate_problem(ProblemKind::T3, 300, 12, 43);
  EXPECT_TRUE(a.A == b.A);
  EXPECT_TRUE(a.b == b.b);
  EXPECT_FALSE(a.A == c.A);
  EXPECT_EQ(a.label, "T3");
  EXPECT_EQ(a.rows(), 300u);
  EXPECT_EQ(a.cols(), 12u);
}

TEST(GenerateProblem, RejectsInvalidShapes) {
  EXPECT_THROW(generate_problem(ProblemKind::GA, 5, 6, 0), std::invalid_argument);
  EXPECT_THROW(generate_problem(ProblemKind::GA, 5, 0, 0), std::invalid_argument);
}

TEST(GenerateProblem, PlantedSolutionPattern) {
  const Vector x = planted_solution(30);
  for (Eigen::Index i = 0; i < 30; ++i) {
    const double expected = (i < 10 || i >= 20) ? 1.0 : 0.1;
    EXPECT_EQ(x(i), expected) << i;
  }
  EXPECT_TRUE(planted_solution(7).isOnes());
}

TEST(GenerateProblem, NoiseStandardDeviationMatchesModel) {
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const LsProblem p = generate_problem(ProblemKind::GA, 200, 20, seed);
    const Vector r = p.b - p.A * planted_solution(20);
    sum_sq += r.squaredNorm();
    count += static_cast<std::size_t>(r.size());
  }
  const double sd = std::sqrt(sum_sq / static_cast<double>(count));
  EXPECT_NEAR(sd, kNoiseStddev, 0.003);
}

TEST(GenerateProblem, GaussianRowsFollowCovariance) {
  const std::size_t n = 4;
  const LsProblem p = generate_problem(ProblemKind::GA, 40000, n, 5);
  const Eigen::MatrixXd sample = (p.A.transpose() * p.A) / static_cast<double>(p.rows());
  const DenseMatrix sigma = synthetic_covariance(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      EXPECT_NEAR(sample(i, j), sigma(i, j), 0.06) << i << "," << j;
      EXPECT_DOUBLE_EQ(sigma(i, j), 2.0 * std::pow(0.5, std::abs(static_cast<double>(i) - static_cast<double>(j))));
    }
  }
}

TEST(GenerateProblem, StudentRowsHaveInflatedVariance) {
  // A multivariate t with df = 5 has covariance Sigma * df / (df - 2).
  const LsProblem p = generate_problem(ProblemKind::T5, 200000, 2, 9);
  const double var = p.A.col(0).squaredNorm() / static_cast<double>(p.rows());
  EXPECT_NEAR(var, 2.0 * 5.0 / 3.0, 0.15);
}

TEST(GenerateProblem, HeavyTailsRaiseCoherence) {
  double max_ga = 0.0;
  double min_t1 = 1.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const MatrixDiagnostics ga = diagnostics(generate_problem(ProblemKind::GA, 2000, 50, seed).A);
    const MatrixDiagnostics t1 = diagnostics(generate_problem(ProblemKind::T1, 2000, 50, seed).A);
    for (const auto& d : {ga, t1}) {
      EXPECT_GE(d.coherence_normalized, 50.0 / 2000.0 - 1e-12);
      EXPECT_LE(d.coherence_normalized, 1.0 + 1e-12);
    }
    max_ga = std::max(max_ga, ga.coherence_normalized);
    min_t1 = std::min(min_t1, t1.coherence_normalized);
  }
  EXPECT_GE(min_t1, max_ga);
}

TEST(Diagnostics, IdentityColumnsHaveMaximalCoherence) {
  DenseMatrix A = DenseMatrix::Zero(12, 3);
  for (Eigen::Index i = 0; i < 3; ++i) A(i, i) = 1.0;
  const MatrixDiagnostics d = diagnostics(A);
  EXPECT_NEAR(d.coherence_mu, 12.0, 1e-9);
  EXPECT_NEAR(d.coherence_normalized, 1.0, 1e-12);
  EXPECT_NEAR(d.condition_number, 1.0, 1e-12);
}

TEST(Diagnostics, EqualRowNormsGiveMinimalCoherence) {
  // Two columns of a normalized 8x8 Hadamard matrix.
  DenseMatrix A(8, 2);
  for (int i = 0; i < 8; ++i) {
    A(i, 0) = 1.0 / std::sqrt(8.0);
    A(i, 1) = ((i & 1) ? -1.0 : 1.0) / std::sqrt(8.0);
  }
  EXPECT_NEAR(diagnostics(A).coherence_normalized, 2.0 / 8.0, 1e-12);
}

TEST(Diagnostics, MatchesSvdOracle) {
  const DenseMatrix A = testutil::gaussian_matrix(100, 10, 3);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(A), Eigen::ComputeThinU);
  const double mu = 100.0 * svd.matrixU().rowwise().squaredNorm().maxCoeff();
  const auto& s = svd.singularValues();
  const MatrixDiagnostics d = diagnostics(A);
  EXPECT_NEAR(d.coherence_mu, mu, 1e-9 * mu);
  EXPECT_NEAR(d.condition_number, s(0) / s(s.size() - 1), 1e-9 * d.condition_number);
}

TEST(Diagnostics, RejectsRankDeficientInput) {
  DenseMatrix A = testutil::gaussian_matrix(20, 3, 1);
  A.col(2) = A.col(0) + A.col(1);
  EXPECT_THROW(diagnostics(A), RankDeficientError);
}

TEST(DirectSolve, IdentityReturnsRhs) {
  const Vector b = testutil::gaussian_vector(6, 2);
  EXPECT_TRUE(direct_solve(DenseMatrix::Identity(6, 6), b).isApprox(b, 1e-14));
}

TEST(DirectSolve, ConsistentSystemIsRecovered) {
  const DenseMatrix A = testutil::gaussian_matrix(40, 6, 8);
  const Vector x = testutil::gaussian_vector(6, 9);
  EXPECT_LE((direct_solve(A, A * x) - x).norm(), 1e-12 * x.norm());
}

TEST(DirectSolve, SatisfiesNormalEquations) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    LsProblem p = generate_problem(ProblemKind::GA, 50, 5, seed);
    const Vector& x = direct_solve(p);
    ASSERT_TRUE(p.x_star.has_value());
    const Vector r = p.A * x - p.b;
    EXPECT_LE((p.A.transpose() * r).norm() / (p.A.norm() * r.norm()), 1e-12);
  }
}

TEST(DirectSolve, RejectsRankDeficientInput) {
  DenseMatrix A = testutil::gaussian_matrix(10, 3, 4);
  A.col(1) = 2.0 * A.col(0);
  EXPECT_THROW(direct_solve(A, testutil::gaussian_vector(10, 5)), RankDeficientError);
}

TEST(ProblemIo, BinaryRoundTripIsExact) {
  const LsProblem p = generate_problem(ProblemKind::T1, 30, 4, 11);
  const auto path = std::filesystem::temp_directory_path() / "saptune_roundtrip.bin";
  save_problem(p, path);
  const LsProblem q = load_problem(path);
  std::filesystem::remove(path);
  EXPECT_TRUE(p.A == q.A);
  EXPECT_TRUE(p.b == q.b);
  EXPECT_EQ(q.label, "T1");
  EXPECT_EQ(q.seed, 11u);
}

TEST(ProblemIo, RejectsCorruptFile) {
  const auto path = std::filesystem::temp_directory_path() / "saptune_corrupt.bin";
  std::ofstream(path) << "not a problem";
  EXPECT_ANY_THROW(load_problem(path));
  std::filesystem::remove(path);
}

TEST(ProblemIo, TextImportTakesLastColumnAsRhs) {
  const auto path = std::filesystem::temp_directory_path() / "saptune_text.csv";
  {
    std::ofstream out(path);
    out << "# a comment\n1, 0, 3\n0; 2; 4\n1 1 5\n";
  }
  const LsProblem p = import_problem_text(path);
  std::filesystem::remove(path);
  ASSERT_EQ(p.rows(), 3u);
  ASSERT_EQ(p.cols(), 2u);
  EXPECT_EQ(p.A(1, 1), 2.0);
  EXPECT_EQ(p.b(2), 5.0);
}
