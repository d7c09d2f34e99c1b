#include "gmra/linalg.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace gmra;
using namespace gmra::testing;

namespace {

// Element-wise double loop.
Matrix covariance_oracle(const PointMatrix& X, const Vector& mean) {
  const Index n = X.rows(), D = X.cols();
  Matrix c = Matrix::Zero(D, D);
  for (Index a = 0; a < D; ++a)
    for (Index b = 0; b < D; ++b) {
      double s = 0.0;
      for (Index i = 0; i < n; ++i) s += (X(i, a) - mean(a)) * (X(i, b) - mean(b));
      c(a, b) = s / static_cast<double>(n);
    }
  return c;
}

// Top-r projector from an SVD of the PSD matrix (singular vectors are eigenvectors).
Matrix top_projector_oracle(const Matrix& psd, Index r) {
  Eigen::JacobiSVD<Matrix> svd(psd, Eigen::ComputeFullU);
  Matrix u = svd.matrixU().leftCols(r);
  return u * u.transpose();
}

// Intersection of two subspaces as the null space of [A, -B].
Matrix intersection_oracle(const Matrix& A, const Matrix& B) {
  Matrix M(A.rows(), A.cols() + B.cols());
  M << A, -B;
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  std::vector<Index> null_cols;
  for (Index i = 0; i < M.cols(); ++i) {
    double sv = i < s.size() ? s(i) : 0.0;
    if (sv < 1e-6) null_cols.push_back(i);
  }
  Matrix vecs(A.rows(), static_cast<Index>(null_cols.size()));
  for (std::size_t c = 0; c < null_cols.size(); ++c)
    vecs.col(static_cast<Index>(c)) = A * svd.matrixV().col(null_cols[c]).head(A.cols());
  return orthonormalize(vecs).basis;
}

}  // namespace

TEST(Covariance, AxisAlignedPair) {
  PointMatrix X(2, 2);
  X << 1, 0, -1, 0;
  Matrix c = covariance(X, Vector::Zero(2));
  Matrix expect(2, 2);
  expect << 1, 0, 0, 0;
  EXPECT_LT((c - expect).norm(), 1e-15);
}

TEST(Covariance, SinglePointIsZero) {
  PointMatrix X(1, 3);
  X << 0.3, -2.0, 7.5;
  Vector m = X.row(0).transpose();
  EXPECT_EQ(covariance(X, m).norm(), 0.0);
}

TEST(Covariance, MatchesDoubleLoop) {
  Rng rng(11);
  PointCloud c = random_cloud(7, 5, rng);
  Vector m = mean_of(c.coords);
  Matrix got = covariance(c.coords, m);
  EXPECT_LT((got - covariance_oracle(c.coords, m)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((got - got.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  Eigen::SelfAdjointEigenSolver<Matrix> es(got);
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12);
}

TEST(Covariance, EmptySliceThrows) {
  PointMatrix X(3, 2);
  X.setZero();
  std::vector<Index> none;
  try {
    covariance(X, none, Vector::Zero(2));
    FAIL();
  } catch (const GmraError& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCell);
  }
}

TEST(TruncatedEig, Diagonal) {
  Matrix c = Eigen::Vector3d(4, 1, 0).asDiagonal();
  EigResult r = truncated_eig(c, 2);
  ASSERT_EQ(r.basis.dim(), 2);
  EXPECT_NEAR(r.top.values(0), 4.0, 1e-14);
  EXPECT_NEAR(r.top.values(1), 1.0, 1e-14);
  Matrix expect = Eigen::Vector3d(1, 1, 0).asDiagonal();
  EXPECT_LT((r.basis.projector() - expect).norm(), 1e-12);
}

TEST(TruncatedEig, DegenerateSpectrum) {
  EigResult r = truncated_eig(Matrix::Identity(3, 3), 1);
  ASSERT_EQ(r.basis.dim(), 1);
  EXPECT_NEAR(r.top.values(0), 1.0, 1e-14);
  EXPECT_NEAR(r.basis.projector().trace(), 1.0, 1e-12);
}

TEST(TruncatedEig, MatchesFullDecomposition) {
  Rng rng(5);
  Matrix a = random_matrix(8, 8, rng);
  Matrix psd = a * a.transpose();
  EigResult r = truncated_eig(psd, 3);
  EXPECT_LT((r.basis.projector() - top_projector_oracle(psd, 3)).norm(), 1e-8);
  Matrix resid = psd * r.basis.basis - r.basis.basis * r.top.values.asDiagonal();
  EXPECT_LE(resid.norm(), 1e-6 * psd.norm());
  EXPECT_NEAR(r.full.total(), psd.trace(), 1e-10 * psd.trace());
  for (Index i = 1; i < r.full.size(); ++i) EXPECT_GE(r.full.values(i - 1), r.full.values(i));
}

TEST(TruncatedEig, RejectsAsymmetric) {
  Matrix m = Matrix::Identity(3, 3);
  m(0, 1) = 1e-3;
  try {
    truncated_eig(m, 1);
    FAIL();
  } catch (const GmraError& e) {
    EXPECT_EQ(e.code(), ErrorCode::AsymmetricInput);
  }
}

TEST(TruncatedEig, RankBeyondNumericalRankReturnsFewer) {
  Matrix c = Eigen::Vector3d(2, 0, 0).asDiagonal();
  EigResult r = truncated_eig(c, 3);
  EXPECT_EQ(r.numerical_rank, 1);
  EXPECT_EQ(r.basis.dim(), 1);
}

TEST(LocalPca, EigenAndSvdRoutesAgree) {
  Rng rng(17);
  // 6 points in R^20 takes the SVD route; the same data padded with copies takes the eigen route.
  PointCloud small = random_cloud(6, 20, rng);
  std::vector<Index> rows{0, 1, 2, 3, 4, 5};
  LocalPca a = local_pca(small.coords, rows, 3);
  PointMatrix rep(12, 20);
  rep << small.coords, small.coords;
  std::vector<Index> rows2(12);
  std::iota(rows2.begin(), rows2.end(), 0);
  LocalPca b = local_pca(rep, rows2, 3);
  EXPECT_LT((a.center - b.center).norm(), 1e-12);
  EXPECT_LT((a.spectrum.values - b.spectrum.values).norm(), 1e-10);
  EXPECT_LT((projector(a.directions) - projector(b.directions)).norm(), 1e-8);
  EXPECT_EQ(a.numerical_rank, 5);
}

TEST(LocalPca, IdenticalPointsHaveRankZero) {
  PointMatrix X(3, 2);
  X << 0.1, 0.7, 0.1, 0.7, 0.1, 0.7;
  std::vector<Index> rows{0, 1, 2};
  LocalPca p = local_pca(X, rows, 2);
  EXPECT_EQ(p.numerical_rank, 0);
  EXPECT_EQ(p.directions.cols(), 0);
}

TEST(ComplementProjection, ContainedSubspaceIsEmpty) {
  SubspaceBasis e1(Matrix::Identity(3, 1));
  SubspaceBasis r = orthonormal_complement_projection(e1, Matrix::Identity(3, 1));
  EXPECT_EQ(r.dim(), 0);
}

TEST(ComplementProjection, OrthogonalVectorKept) {
  SubspaceBasis e1(Matrix::Identity(3, 1));
  Matrix e2 = Matrix::Zero(3, 1);
  e2(1, 0) = 1;
  SubspaceBasis r = orthonormal_complement_projection(e1, e2);
  ASSERT_EQ(r.dim(), 1);
  EXPECT_NEAR(std::abs(r.basis(1, 0)), 1.0, 1e-14);
}

TEST(ComplementProjection, MatchesProjectThenQr) {
  Rng rng(23);
  SubspaceBasis plane(random_orthonormal(6, 2, rng));
  Matrix v = random_matrix(6, 3, rng);
  SubspaceBasis r = orthonormal_complement_projection(plane, v);
  Matrix projected = v - plane.basis * (plane.basis.transpose() * v);
  Eigen::HouseholderQR<Matrix> qr(projected);
  Matrix q = qr.householderQ() * Matrix::Identity(6, 3);
  ASSERT_EQ(r.dim(), 3);
  EXPECT_LT((r.projector() - projector(q)).norm(), 1e-8);
  EXPECT_LT(max_gram_deviation(r.basis), 1e-10);
  EXPECT_LT((plane.basis.transpose() * r.basis).norm(), 1e-12);
  Matrix P = r.projector();
  EXPECT_LT((P * P - P).norm(), 1e-9);
}

TEST(Intersection, CoordinatePlanes) {
  Matrix a = Matrix::Zero(3, 2), b = Matrix::Zero(3, 2);
  a(0, 0) = 1;
  a(1, 1) = 1;
  b(1, 0) = 1;
  b(2, 1) = 1;
  SubspaceBasis r = subspace_intersection({SubspaceBasis(a), SubspaceBasis(b)});
  ASSERT_EQ(r.dim(), 1);
  EXPECT_NEAR(std::abs(r.basis(1, 0)), 1.0, 1e-12);
}

TEST(Intersection, IdenticalBases) {
  Rng rng(3);
  Matrix a = random_orthonormal(7, 3, rng);
  SubspaceBasis r = subspace_intersection({SubspaceBasis(a), SubspaceBasis(a)});
  ASSERT_EQ(r.dim(), 3);
  EXPECT_LT((r.projector() - projector(a)).norm(), 1e-8);
}

TEST(Intersection, MatchesNullSpaceOracle) {
  Matrix a = Matrix::Zero(4, 2), b = Matrix::Zero(4, 2);
  a(0, 0) = 1;
  a(1, 1) = a(2, 1) = 1.0 / std::sqrt(2.0);
  b(0, 0) = 1;
  b(3, 1) = 1;
  SubspaceBasis r = subspace_intersection({SubspaceBasis(a), SubspaceBasis(b)});
  Matrix oracle = intersection_oracle(a, b);
  ASSERT_EQ(r.dim(), 1);
  ASSERT_EQ(oracle.cols(), 1);
  EXPECT_LT((r.projector() - projector(oracle)).norm(), 1e-8);
  EXPECT_NEAR(std::abs(r.basis(0, 0)), 1.0, 1e-12);
}

TEST(Intersection, RandomSharedDirectionsAgreeWithOracle) {
  Rng rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix shared = random_orthonormal(10, 2, rng);
    Matrix a(10, 4), b(10, 3);
    a << shared, random_matrix(10, 2, rng);
    b << shared, random_matrix(10, 1, rng);
    SubspaceBasis A = orthonormalize(a), B = orthonormalize(b);
    SubspaceBasis r = subspace_intersection({A, B});
    Matrix oracle = intersection_oracle(A.basis, B.basis);
    ASSERT_EQ(r.dim(), oracle.cols());
    EXPECT_LT((r.projector() - projector(oracle)).norm(), 1e-8);
    for (const SubspaceBasis* s : {&A, &B})
      EXPECT_LT((r.basis - s->projector() * r.basis).norm(), 1e-6);
  }
}

TEST(Intersection, EmptyInputBasis) {
  SubspaceBasis e = SubspaceBasis::empty(3);
  SubspaceBasis a(Matrix::Identity(3, 2));
  EXPECT_EQ(subspace_intersection({a, e}).dim(), 0);
}
