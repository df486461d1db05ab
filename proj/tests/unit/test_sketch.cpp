#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "saptune/sketch.hpp"
#include "test_support.hpp"

using namespace saptune;

namespace {

double isometry_mean(SketchKind kind, std::size_t d, std::size_t m, std::size_t k, double* stderr_out) {
  Vector v = testutil::gaussian_vector(m, 77);
  v.normalize();
  const int trials = 2000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double q = apply_vector(sample_operator(kind, d, m, k, 1000 + static_cast<std::uint64_t>(t)), v).squaredNorm();
    sum += q;
    sum_sq += q * q;
  }
  const double mean = sum / trials;
  *stderr_out = std::sqrt((sum_sq / trials - mean * mean) / (trials - 1));
  return mean;
}

}  // namespace

TEST(SampleOperator, DenseSjltWhenKEqualsD) {
  const DenseMatrix S = sample_operator(SketchKind::SJLT, 4, 10, 4, 1).to_dense();
  EXPECT_TRUE((S.array().abs() == 0.5).all());
  for (Eigen::Index j = 0; j < S.cols(); ++j) EXPECT_NEAR(S.col(j).norm(), 1.0, 1e-15);
}

TEST(SampleOperator, DenseLessUniformWhenKEqualsM) {
  const DenseMatrix S = sample_operator(SketchKind::LessUniform, 3, 6, 6, 2).to_dense();
  EXPECT_TRUE(((S.array().abs() - std::sqrt(1.0 / 3.0)).abs() < 1e-15).all());
}

TEST(SampleOperator, LessUniformSingleEntryPerRow) {
  const SketchOperator S = sample_operator(SketchKind::LessUniform, 5, 100, 1, 3);
  EXPECT_EQ(S.nnz(), 5u);
  const DenseMatrix D = S.to_dense();
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_EQ((D.row(i).array() != 0.0).count(), 1);
}

TEST(SampleOperator, ClampsKAndRejectsBadDimensions) {
  EXPECT_EQ(sample_operator(SketchKind::SJLT, 3, 50, 10, 0).nnz_per_group(), 3u);
  EXPECT_EQ(sample_operator(SketchKind::LessUniform, 3, 5, 10, 0).nnz_per_group(), 5u);
  EXPECT_THROW(sample_operator(SketchKind::SJLT, 0, 5, 1, 0), std::invalid_argument);
  EXPECT_THROW(sample_operator(SketchKind::SJLT, 2, 0, 1, 0), std::invalid_argument);
  EXPECT_THROW(sample_operator(SketchKind::LessUniform, 2, 5, 0, 0), std::invalid_argument);
}

TEST(SampleOperator, ExactSparsityAndMagnitudes) {
  for (SketchKind kind : {SketchKind::SJLT, SketchKind::LessUniform}) {
    for (std::size_t k : {1u, 3u, 7u}) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t d = 12;
        const std::size_t m = 90;
        const SketchOperator S = sample_operator(kind, d, m, k, seed);
        const double magnitude = kind == SketchKind::SJLT
                                     ? 1.0 / std::sqrt(static_cast<double>(k))
                                     : std::sqrt(static_cast<double>(m) / static_cast<double>(k * d));
        const DenseMatrix D = S.to_dense();
        const Eigen::Index groups = kind == SketchKind::SJLT ? D.cols() : D.rows();
        for (Eigen::Index g = 0; g < groups; ++g) {
          const auto line = kind == SketchKind::SJLT ? Eigen::VectorXd(D.col(g)) : Eigen::VectorXd(D.row(g).transpose());
          EXPECT_EQ((line.array() != 0.0).count(), static_cast<Eigen::Index>(k));
          for (Eigen::Index i = 0; i < line.size(); ++i) {
            if (line(i) != 0.0) EXPECT_NEAR(std::abs(line(i)), magnitude, 1e-15);
          }
          const auto idx = S.group_indices(static_cast<std::size_t>(g));
          EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
          EXPECT_EQ(std::set<std::uint32_t>(idx.begin(), idx.end()).size(), k);
        }
      }
    }
  }
}

TEST(SampleOperator, DeterministicGivenSeed) {
  const DenseMatrix a = sample_operator(SketchKind::SJLT, 8, 40, 3, 5).to_dense();
  const DenseMatrix b = sample_operator(SketchKind::SJLT, 8, 40, 3, 5).to_dense();
  const DenseMatrix c = sample_operator(SketchKind::SJLT, 8, 40, 3, 6).to_dense();
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
}

TEST(SampleOperator, FullDensityKindsShareMagnitude) {
  const DenseMatrix sj = sample_operator(SketchKind::SJLT, 6, 30, 6, 1).to_dense();
  const DenseMatrix lu = sample_operator(SketchKind::LessUniform, 6, 30, 30, 1).to_dense();
  EXPECT_NEAR(sj.cwiseAbs().maxCoeff(), lu.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(sj.cwiseAbs().minCoeff(), lu.cwiseAbs().minCoeff(), 1e-15);
}

TEST(Apply, IdentityYieldsOperator) {
  for (SketchKind kind : {SketchKind::SJLT, SketchKind::LessUniform}) {
    const SketchOperator S = sample_operator(kind, 7, 25, 3, 4);
    EXPECT_TRUE(apply(S, DenseMatrix::Identity(25, 25)) == S.to_dense());
  }
}

TEST(Apply, MatchesDenseProduct) {
  const DenseMatrix A = testutil::gaussian_matrix(50, 5, 10);
  for (SketchKind kind : {SketchKind::SJLT, SketchKind::LessUniform}) {
    const SketchOperator S = sample_operator(kind, 15, 50, 4, 11);
    const DenseMatrix oracle = S.to_dense() * A;
    EXPECT_LE((apply(S, A) - oracle).norm(), 1e-12 * oracle.norm());
    const Vector v = testutil::gaussian_vector(50, 12);
    const Vector ov = S.to_dense() * v;
    EXPECT_LE((apply_vector(S, v) - ov).norm(), 1e-12 * ov.norm());
  }
}

TEST(Apply, SjltColumnsAreUnitNorm) {
  const SketchOperator S = sample_operator(SketchKind::SJLT, 9, 30, 4, 13);
  for (Eigen::Index j = 0; j < 30; ++j) {
    const Vector e = Vector::Unit(30, j);
    const Vector col = apply_vector(S, e);
    EXPECT_NEAR(col.norm(), 1.0, 1e-15);
    EXPECT_TRUE(col == Vector(S.to_dense().col(j)));
  }
  EXPECT_TRUE(apply_vector(S, Vector::Zero(30)).isZero(0.0));
}

TEST(Apply, RejectsShapeMismatch) {
  const SketchOperator S = sample_operator(SketchKind::SJLT, 4, 10, 2, 0);
  EXPECT_THROW(apply(S, DenseMatrix::Zero(9, 2)), std::invalid_argument);
  EXPECT_THROW(apply_vector(S, Vector::Zero(11)), std::invalid_argument);
}

TEST(Isometry, ExpectedSquaredNormIsOne) {
  const std::size_t d = 20;
  const std::size_t m = 400;
  for (SketchKind kind : {SketchKind::SJLT, SketchKind::LessUniform}) {
    for (std::size_t k : {std::size_t{1}, std::size_t{4}, kind == SketchKind::SJLT ? d : m}) {
      double se = 0.0;
      const double mean = isometry_mean(kind, d, m, k, &se);
      EXPECT_LE(std::abs(mean - 1.0), 5.0 * se) << to_string(kind) << " k=" << k;
    }
  }
}
