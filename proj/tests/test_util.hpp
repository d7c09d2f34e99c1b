#pragma once

#include "gmra/linalg.hpp"
#include "gmra/point_cloud.hpp"
#include "gmra/random.hpp"

#include <cmath>

namespace gmra::testing {

inline Matrix random_matrix(Index r, Index c, Rng& rng) {
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

inline Matrix random_orthonormal(Index r, Index c, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(r, c, rng));
  return qr.householderQ() * Matrix::Identity(r, c);
}

inline PointCloud random_cloud(Index n, Index D, Rng& rng) {
  PointMatrix m(n, D);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < D; ++j) m(i, j) = rng.normal();
  return PointCloud(std::move(m), "gaussian");
}

// n points on a random d-dimensional affine subspace of R^D.
inline PointCloud flat_cloud(Index n, Index d, Index D, Rng& rng) {
  Matrix basis = random_orthonormal(D, d, rng);
  Vector offset = random_matrix(D, 1, rng).col(0);
  PointMatrix m(n, D);
  for (Index i = 0; i < n; ++i) {
    Vector t(d);
    for (Index a = 0; a < d; ++a) t(a) = rng.uniform(-1.0, 1.0);
    m.row(i) = (offset + basis * t).transpose();
  }
  return PointCloud(std::move(m), "flat");
}

inline Matrix projector(const Matrix& b) { return b * b.transpose(); }

// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace gmra::testing

#include "gmra/gmra.hpp"
#include "gmra/partition_tree.hpp"
#include "gmra/synth.hpp"

namespace gmra::testing {

inline PointCloud manifold(GeneratorKind kind, Index n, Index D = 50, std::uint64_t seed = 1, double noise = 0.0) {
  GeneratorSpec s;
  s.kind = kind;
  s.n = n;
  s.D = D;
  s.seed = seed;
  s.noise = noise;
  return generate(s);
}

inline GmraModel build_model(const PointCloud& c, const DimensionPolicy& pol, int splits_per_scale = 1,
                             GmraOptions opt = {}, StoppingRule st = {}) {
  SplitOptions so;
  so.splits_per_scale = splits_per_scale;
  return construct_gmra(c, build_tree(c, SplitMethod::IteratedPCA, st, 0, so), pol, 0.0, opt);
}

// Tree from explicit child partitions of the root (one level).
inline PartitionTree two_level_tree(const PointCloud& c, const std::vector<std::vector<Index>>& parts) {
  PartitionTree t;
  t.n_points = c.n();
  t.ambient_dim = c.dim();
  CellNode root;
  root.id = {0, 0};
  for (Index i = 0; i < c.n(); ++i) root.points.push_back(i);
  root.center = mean_of(c.coords);
  t.nodes.push_back(root);
  int k = 0;
  for (const auto& p : parts) {
    CellNode ch;
    ch.id = {1, k++};
    ch.parent = 0;
    ch.points = p;
    ch.center = mean_of(c.coords, p);
    t.nodes[0].children.push_back(static_cast<int>(t.nodes.size()));
    t.nodes.push_back(ch);
  }
  t.rebuild_indexes();
  return t;
}

}  // namespace gmra::testing
