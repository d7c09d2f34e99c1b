#pragma once

#include "gmra/types.hpp"

#include <span>
#include <vector>

namespace gmra {

// Orthonormal columns spanning a subspace of R^D. A D x 0 matrix is the zero subspace.
struct SubspaceBasis {
  Matrix basis;

  SubspaceBasis() = default;
  explicit SubspaceBasis(Matrix b) : basis(std::move(b)) {}
  static SubspaceBasis empty(Index ambient_dim) { return SubspaceBasis(Matrix(ambient_dim, 0)); }

  Index ambient_dim() const { return basis.rows(); }
  Index dim() const { return basis.cols(); }
  Matrix projector() const { return basis * basis.transpose(); }
};

// Nonincreasing, nonnegative eigenvalues.
struct Spectrum {
  Vector values;

  Index size() const { return values.size(); }
  double total() const { return values.sum(); }
  // Sum of values with index >= d (0-based), i.e. the variance left after keeping d directions.
  double tail(Index d) const;
};

Vector mean_of(const PointMatrix& points, std::span<const Index> rows);
Vector mean_of(const PointMatrix& points);

// (1/n) sum (x - mean)(x - mean)^T over the selected rows.
Matrix covariance(const PointMatrix& points, std::span<const Index> rows, const Vector& mean);
Matrix covariance(const PointMatrix& points, const Vector& mean);

struct EigResult {
  SubspaceBasis basis;  // top eigenvectors, at most numerical_rank of them
  Spectrum top;
  Spectrum full;
  int numerical_rank = 0;
};

// Eigenvalues below rel_rank_tol * largest count as zero when deciding the numerical rank.
inline constexpr double kRankTolerance = 1e-8;

EigResult truncated_eig(const Matrix& cov, Index rank, double rel_rank_tol = kRankTolerance);

// Local PCA of a cell: center, leading directions (up to max_rank) and the full covariance
// spectrum padded with zeros to length D. Picks the D x D eigenproblem or a thin SVD of
// the centered data depending on which is smaller.
struct LocalPca {
  Vector center;
  Matrix directions;
  Spectrum spectrum;
  int numerical_rank = 0;
};

LocalPca local_pca(const PointMatrix& points, std::span<const Index> rows, Index max_rank,
                   double rel_rank_tol = kRankTolerance);

// Orthonormal basis of span((I - B B^T) V), dropping directions with singular value <= rank_tol.
SubspaceBasis orthonormal_complement_projection(const SubspaceBasis& basis, const Matrix& vectors,
                                                double rank_tol = 1e-8);

// Directions lying (up to angle_tol on the cosine) in every input subspace.
SubspaceBasis subspace_intersection(const std::vector<SubspaceBasis>& bases,
                                    double angle_tol = 1e-8);

// Orthonormal basis of span(vectors) via SVD; singular values <= rank_tol dropped.
SubspaceBasis orthonormalize(const Matrix& vectors, double rank_tol = 1e-8);

// Flips column signs so the entry of largest magnitude is positive.
void normalize_signs(Matrix& columns);

double max_gram_deviation(const Matrix& columns);

}  // namespace gmra
