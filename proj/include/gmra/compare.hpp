#pragma once

#include "gmra/gmra.hpp"
#include "gmra/ortho.hpp"
#include "gmra/pruning.hpp"

#include <string>
#include <vector>

namespace gmra {

// Numbers the inverse transform reads: every wavelet basis and translation, plus the scaling
// bases it projects with (all nodes with tangential corrections, the root otherwise).
EncodingCost gmra_dictionary_cost(const GmraModel& model);
EncodingCost ortho_dictionary_cost(const OrthoGmraModel& model);

// Thresholded transforms of the training set; coefficient cost = surviving entries
// (the root block always survives). Errors against the training points.
std::vector<CostPoint> gmra_threshold_curve(const GmraModel& model, const PointCloud& cloud,
                                            const std::vector<double>& deltas);
std::vector<CostPoint> ortho_threshold_curve(const OrthoGmraModel& model, const PointCloud& cloud,
                                             const std::vector<double>& deltas);
// One pruning run per precision.
std::vector<CostPoint> pruned_curve(const PointCloud& cloud, const PartitionTree& tree,
                                    const std::vector<double>& eps_grid);

struct MethodCurve {
  std::string method;
  std::vector<CostPoint> points;
};

struct CompareOptions {
  DimensionPolicy policy = DimensionPolicy::fixed(2);
  double ortho_precision = 1e-3;
  std::vector<double> deltas;    // thresholds for gmra, ortho and svd_threshold
  std::vector<double> eps_grid;  // precisions for pruned
  int svd_max_rank = -1;
};

// Methods: gmra, ortho, pruned, svd, svd_threshold.
std::vector<MethodCurve> compare_encoders(const PointCloud& cloud, const PartitionTree& tree,
                                          const CompareOptions& opt);

// Columns: method, then the cost_curve_csv columns.
std::string compare_csv(const std::vector<MethodCurve>& curves);

// Smallest coefficient cost over points with rms_error <= err (+inf if none).
double min_coefficient_cost_at(const std::vector<CostPoint>& points, double err);

// n values spaced evenly in log between lo and hi.
std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace gmra
