#include "gmra/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gmra {

double Spectrum::tail(Index d) const {
  if (d >= values.size()) return 0.0;
  return values.tail(values.size() - d).sum();
}

Vector mean_of(const PointMatrix& points, std::span<const Index> rows) {
  if (rows.empty()) throw GmraError(ErrorCode::EmptyCell, "mean of an empty cell");
  Vector m = Vector::Zero(points.cols());
  for (Index r : rows) m += points.row(r).transpose();
  return m / static_cast<double>(rows.size());
}

Vector mean_of(const PointMatrix& points) {
  if (points.rows() == 0) throw GmraError(ErrorCode::EmptyCell, "mean of an empty cell");
  return points.colwise().mean().transpose();
}

namespace {

Matrix centered_rows(const PointMatrix& points, std::span<const Index> rows, const Vector& mean) {
  Matrix y(static_cast<Index>(rows.size()), points.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    y.row(static_cast<Index>(i)) = points.row(rows[i]) - mean.transpose();
  return y;
}

}  // namespace

Matrix covariance(const PointMatrix& points, std::span<const Index> rows, const Vector& mean) {
  if (rows.empty()) throw GmraError(ErrorCode::EmptyCell, "covariance of an empty cell");
  if (mean.size() != points.cols())
    throw GmraError(ErrorCode::DimMismatch, "mean has the wrong ambient dimension");
  Matrix y = centered_rows(points, rows, mean);
  Matrix cov = Matrix::Zero(points.cols(), points.cols());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(y.transpose(), 1.0 / static_cast<double>(rows.size()));
  return cov.selfadjointView<Eigen::Lower>();
}

Matrix covariance(const PointMatrix& points, const Vector& mean) {
  std::vector<Index> rows(static_cast<std::size_t>(points.rows()));
  for (Index i = 0; i < points.rows(); ++i) rows[static_cast<std::size_t>(i)] = i;
  return covariance(points, rows, mean);
}

void normalize_signs(Matrix& columns) {
  for (Index c = 0; c < columns.cols(); ++c) {
    Index arg = 0;
    double best = -1.0;
    for (Index r = 0; r < columns.rows(); ++r) {
      double a = std::abs(columns(r, c));
      if (a > best + 1e-12) {
        best = a;
        arg = r;
      }
    }
    if (columns.rows() > 0 && columns(arg, c) < 0) columns.col(c) *= -1.0;
  }
}

double max_gram_deviation(const Matrix& columns) {
  if (columns.cols() == 0) return 0.0;
  Matrix g = columns.transpose() * columns;
  g -= Matrix::Identity(g.rows(), g.cols());
  return g.cwiseAbs().maxCoeff();
}

namespace {

int rank_of(const Vector& desc_values, double rel_tol) {
  if (desc_values.size() == 0) return 0;
  double top = desc_values(0);
  if (!(top > 0.0)) return 0;
  int r = 0;
  for (Index i = 0; i < desc_values.size(); ++i)
    if (desc_values(i) > rel_tol * top) ++r;
  return r;
}

}  // namespace

EigResult truncated_eig(const Matrix& cov, Index rank, double rel_rank_tol) {
  if (cov.rows() != cov.cols()) throw GmraError(ErrorCode::DimMismatch, "covariance must be square");
  if (rank < 0 || rank > cov.rows())
    throw GmraError(ErrorCode::DimMismatch, "rank exceeds ambient dimension");
  const Index d = cov.rows();
  EigResult out;
  if (d == 0) {
    out.basis = SubspaceBasis::empty(0);
    return out;
  }
  double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw GmraError(ErrorCode::AsymmetricInput, "covariance is not symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()));
  Vector vals = es.eigenvalues().reverse().cwiseMax(0.0);
  Matrix vecs = es.eigenvectors().rowwise().reverse();
  out.full.values = vals;
  out.numerical_rank = rank_of(vals, rel_rank_tol);
  Index keep = std::min<Index>(rank, out.numerical_rank);
  Matrix basis = vecs.leftCols(keep);
  normalize_signs(basis);
  out.basis = SubspaceBasis(std::move(basis));
  out.top.values = vals.head(keep);
  return out;
}

LocalPca local_pca(const PointMatrix& points, std::span<const Index> rows, Index max_rank,
                   double rel_rank_tol) {
  if (rows.empty()) throw GmraError(ErrorCode::EmptyCell, "local PCA of an empty cell");
  const Index D = points.cols();
  const Index n = static_cast<Index>(rows.size());
  LocalPca out;
  out.center = mean_of(points, rows);
  Matrix y = centered_rows(points, rows, out.center);

  // Identical points: the centered data is pure rounding noise.
  double spread = y.size() ? y.cwiseAbs().maxCoeff() : 0.0;
  double mag = std::max(1.0, out.center.cwiseAbs().maxCoeff());
  if (spread <= 64.0 * std::numeric_limits<double>::epsilon() * mag) {
    out.directions = Matrix(D, 0);
    out.spectrum.values = Vector::Zero(D);
    out.numerical_rank = 0;
    return out;
  }

  max_rank = std::min(max_rank, D);
  if (D <= 2 * n) {
    Matrix cov = Matrix::Zero(D, D);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(y.transpose(), 1.0 / static_cast<double>(n));
    Matrix full = cov.selfadjointView<Eigen::Lower>();
    EigResult e = truncated_eig(full, max_rank, rel_rank_tol);
    out.directions = std::move(e.basis.basis);
    out.spectrum = std::move(e.full);
    out.numerical_rank = e.numerical_rank;
    return out;
  }

  Eigen::BDCSVD<Matrix> svd(y, Eigen::ComputeThinV);
  Vector vals = Vector::Zero(D);
  const Vector& s = svd.singularValues();
  for (Index i = 0; i < s.size(); ++i) vals(i) = s(i) * s(i) / static_cast<double>(n);
  out.spectrum.values = vals;
  out.numerical_rank = rank_of(vals, rel_rank_tol);
  Index keep = std::min<Index>(max_rank, out.numerical_rank);
  Matrix basis = svd.matrixV().leftCols(keep);
  normalize_signs(basis);
  out.directions = std::move(basis);
  return out;
}

SubspaceBasis orthonormalize(const Matrix& vectors, double rank_tol) {
  const Index D = vectors.rows();
  if (vectors.cols() == 0) return SubspaceBasis::empty(D);
  Eigen::JacobiSVD<Matrix> svd(vectors, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  Index keep = 0;
  while (keep < s.size() && s(keep) > rank_tol) ++keep;
  Matrix u = svd.matrixU().leftCols(keep);
  normalize_signs(u);
  return SubspaceBasis(std::move(u));
}

SubspaceBasis orthonormal_complement_projection(const SubspaceBasis& basis, const Matrix& vectors,
                                                double rank_tol) {
  if (basis.ambient_dim() != vectors.rows())
    throw GmraError(ErrorCode::DimMismatch, "complement projection: ambient dimensions differ");
  Matrix m = vectors;
  if (basis.dim() > 0) {
    // Two passes of Gram-Schmidt against the basis.
    m -= basis.basis * (basis.basis.transpose() * m);
    m -= basis.basis * (basis.basis.transpose() * m);
  }
  SubspaceBasis out = orthonormalize(m, rank_tol);
  if (basis.dim() > 0 && out.dim() > 0) {
    out.basis -= basis.basis * (basis.basis.transpose() * out.basis);
    Eigen::HouseholderQR<Matrix> qr(out.basis);
    Matrix q = qr.householderQ() * Matrix::Identity(out.basis.rows(), out.basis.cols());
    // Keep the orientation of the SVD basis.
    for (Index c = 0; c < q.cols(); ++c)
      if (q.col(c).dot(out.basis.col(c)) < 0) q.col(c) *= -1.0;
    out.basis = std::move(q);
  }
  return out;
}

SubspaceBasis subspace_intersection(const std::vector<SubspaceBasis>& bases, double angle_tol) {
  if (bases.empty()) throw GmraError(ErrorCode::NotApplicable, "intersection of no subspaces");
  const Index D = bases.front().ambient_dim();
  for (const auto& b : bases)
    if (b.ambient_dim() != D)
      throw GmraError(ErrorCode::DimMismatch, "intersection: ambient dimensions differ");
  Matrix cur = bases.front().basis;
  for (std::size_t i = 1; i < bases.size() && cur.cols() > 0; ++i) {
    const Matrix& other = bases[i].basis;
    if (other.cols() == 0) return SubspaceBasis::empty(D);
    Matrix cross = cur.transpose() * other;
    Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU);
    const Vector& cosines = svd.singularValues();
    Index keep = 0;
    while (keep < cosines.size() && cosines(keep) >= 1.0 - angle_tol) ++keep;
    cur = cur * svd.matrixU().leftCols(keep);
  }
  return orthonormalize(cur, 0.5);
}

}  // namespace gmra
