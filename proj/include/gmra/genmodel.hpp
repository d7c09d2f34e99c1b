#pragma once

#include "gmra/gmra.hpp"

#include <cstdint>
#include <vector>

namespace gmra {

struct CellFactor {
  int node = -1;  // index into the model's nodes
  NodeId id;
  Vector center;
  Matrix axes;    // D x d scaling basis of the cell
  Vector mean;    // mean of the local coordinates
  Vector stddev;  // per-axis standard deviation (diagonal model)
  Matrix chol;    // lower Cholesky factor of the local covariance (full model only)
};

struct ScaleModel {
  int j = 0;
  Index ambient_dim = 0;
  bool full_covariance = false;
  std::vector<double> weights;  // n_cell / n
  std::vector<CellFactor> cells;
};

// Gaussian factor per cell of the scale-j partition, in local coordinates Phi^T (x - c).
ScaleModel fit_scale_model(const GmraModel& model, const PointCloud& cloud, int j, bool full_covariance = false);

struct GeneratedSample {
  PointCloud cloud;
  std::vector<int> cell;  // index into ScaleModel::cells per sample
};

GeneratedSample sample_with_cells(const ScaleModel& sm, Index m, std::uint64_t seed);
PointCloud sample(const ScaleModel& sm, Index m, std::uint64_t seed);

enum class HausdorffMode { Max, Median };

// Max: symmetric Hausdorff distance. Median: larger of the two directed medians of
// nearest-neighbor distances (mean of the two middle values for even counts).
double hausdorff(const PointCloud& a, const PointCloud& b, HausdorffMode mode);

// Nearest-neighbor distance from each row of `from` to `to`.
std::vector<double> nearest_distances(const PointMatrix& from, const PointMatrix& to);

}  // namespace gmra
