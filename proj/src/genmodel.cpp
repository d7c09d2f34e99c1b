#include "gmra/genmodel.hpp"

#include "gmra/parallel.hpp"
#include "gmra/random.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gmra {

ScaleModel fit_scale_model(const GmraModel& model, const PointCloud& cloud, int j, bool full_covariance) {
  if (cloud.n() != model.tree.n_points || cloud.dim() != model.ambient_dim())
    throw GmraError(ErrorCode::DimMismatch, "cloud does not match the model");
  if (j < 0 || j > model.max_scale())
    throw GmraError(ErrorCode::NodeNotFound, "scale " + std::to_string(j) + " does not exist");
  ScaleModel sm;
  sm.j = j;
  sm.ambient_dim = cloud.dim();
  sm.full_covariance = full_covariance;
  std::vector<int> cells = model.tree.leaves_at_scale_or_above(j);
  sm.cells.resize(cells.size());
  sm.weights.resize(cells.size());
  const double n = static_cast<double>(cloud.n());
  parallel_for(0, cells.size(), [&](std::size_t i) {
    const GmraNode& nd = model.node_at(cells[i]);
    const CellNode& cell = model.tree.nodes[static_cast<std::size_t>(cells[i])];
    CellFactor& f = sm.cells[i];
    f.node = cells[i];
    f.id = nd.id;
    f.center = nd.center;
    f.axes = nd.phi;
    const Index d = nd.phi.cols();
    Matrix Y(d, cell.size());
    for (Index p = 0; p < cell.size(); ++p)
      Y.col(p) = nd.phi.transpose() * (cloud.point(cell.points[static_cast<std::size_t>(p)]) - nd.center);
    f.mean = Y.rowwise().mean();
    Matrix Yc = Y.colwise() - f.mean;
    Matrix cov = d > 0 ? Matrix(Yc * Yc.transpose() / static_cast<double>(cell.size())) : Matrix(0, 0);
    f.stddev = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    if (full_covariance && d > 0) {
      // Pivoted LDL^T tolerates singular covariances.
      Eigen::LDLT<Matrix> ldlt(cov);
      Matrix L = ldlt.matrixL();
      Vector sd = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
      f.chol = ldlt.transpositionsP().transpose() * (L * sd.asDiagonal());
    }
    sm.weights[i] = static_cast<double>(cell.size()) / n;
  });
  return sm;
}

GeneratedSample sample_with_cells(const ScaleModel& sm, Index m, std::uint64_t seed) {
  if (m < 1) throw GmraError(ErrorCode::ConfigError, "sample count must be positive");
  if (sm.cells.empty()) throw GmraError(ErrorCode::EmptyInput, "scale model has no cells");
  std::vector<double> cum(sm.weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < cum.size(); ++i) cum[i] = acc += sm.weights[i];
  GeneratedSample out;
  out.cell.resize(static_cast<std::size_t>(m));
  PointMatrix X(m, sm.ambient_dim);
  constexpr Index kChunk = 4096;
  const std::size_t chunks = static_cast<std::size_t>((m + kChunk - 1) / kChunk);
  parallel_for(0, chunks, [&](std::size_t c) {
    Rng rng(mix_seed(seed, 0x67656eULL, c));
    Index lo = static_cast<Index>(c) * kChunk, hi = std::min(m, lo + kChunk);
    for (Index s = lo; s < hi; ++s) {
      double u = rng.uniform() * acc;
      std::size_t k = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
      k = std::min(k, cum.size() - 1);
      const CellFactor& f = sm.cells[k];
      const Index d = f.axes.cols();
      Vector z(d);
      for (Index a = 0; a < d; ++a) z(a) = rng.normal();
      Vector y = sm.full_covariance ? Vector(f.mean + f.chol * z) : Vector(f.mean + f.stddev.cwiseProduct(z));
      X.row(s) = (f.center + f.axes * y).transpose();
      out.cell[static_cast<std::size_t>(s)] = static_cast<int>(k);
    }
  });
  out.cloud = PointCloud(std::move(X), "generated");
  return out;
}

PointCloud sample(const ScaleModel& sm, Index m, std::uint64_t seed) { return sample_with_cells(sm, m, seed).cloud; }

std::vector<double> nearest_distances(const PointMatrix& from, const PointMatrix& to) {
  if (from.cols() != to.cols()) throw GmraError(ErrorCode::DimMismatch, "clouds have different dimensions");
  if (from.rows() == 0 || to.rows() == 0) throw GmraError(ErrorCode::EmptyInput, "empty point cloud");
  const Index D = from.cols();
  std::vector<double> out(static_cast<std::size_t>(from.rows()));
  parallel_for(0, out.size(), [&](std::size_t i) {
    const double* a = from.row(static_cast<Index>(i)).data();
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < to.rows(); ++j) {
      const double* b = to.row(j).data();
      double s = 0.0;
      for (Index k = 0; k < D; ++k) {
        double t = a[k] - b[k];
        s += t * t;
        if (s >= best) break;
      }
      best = std::min(best, s);
    }
    out[i] = std::sqrt(best);
  });
  return out;
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double hausdorff(const PointCloud& a, const PointCloud& b, HausdorffMode mode) {
  std::vector<double> ab = nearest_distances(a.coords, b.coords), ba = nearest_distances(b.coords, a.coords);
  if (mode == HausdorffMode::Max)
    return std::max(*std::max_element(ab.begin(), ab.end()), *std::max_element(ba.begin(), ba.end()));
  return std::max(median_of(std::move(ab)), median_of(std::move(ba)));
}

}  // namespace gmra
