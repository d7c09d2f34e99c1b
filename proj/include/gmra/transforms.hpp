#pragma once

#include "gmra/gmra.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gmra {

// Coefficients of one point. path[t] is the cell at depth t (root first); blocks[0] is the
// root scaling block p_0 and blocks[t] for t >= 1 is the wavelet block q_t of path[t].
struct GwtCoefficients {
  std::vector<NodeId> path;
  std::vector<Vector> blocks;
  Index ambient_dim = 0;
  std::uint64_t model_id = 0;
  double residual_norm = 0.0;  // ||x - x_J|| at transform time

  Index total_size() const;
  Index nonzeros() const;
};

// Nearest leaf center; ties go to the smaller k, then the smaller j.
int assign_leaf_index(const GmraModel& model, const Vector& x);

GwtCoefficients fgwt(const GmraModel& model, const Vector& x, int leaf);
GwtCoefficients fgwt(const GmraModel& model, const Vector& x);  // nearest-leaf assignment
Vector igwt(const GmraModel& model, const GwtCoefficients& coeffs);

// Reconstruction using the blocks of scales 0..j only (x_j, or x~_j without tangential corrections).
Vector igwt_to_scale(const GmraModel& model, const GwtCoefficients& coeffs, int j);

// Training points, each through its own leaf.
std::vector<GwtCoefficients> fgwt_all(const GmraModel& model, const PointCloud& cloud);
PointMatrix igwt_all(const GmraModel& model, const std::vector<GwtCoefficients>& coeffs);

enum class ThresholdMode { Entrywise, Block };

struct ThresholdReport {
  double delta = 0.0;
  Index kept = 0;
  Index total = 0;
  double ratio = 1.0;
  std::vector<double> errors;  // per point
  double rms_error = 0.0;
  double max_error = 0.0;
};

// Zeroes wavelet entries (or whole blocks, by Euclidean norm) below delta; the root block is
// kept. Errors are measured against `reference` rows (e.g. the original points).
ThresholdReport threshold_coefficients(const GmraModel& model, const std::vector<GwtCoefficients>& coeffs,
                                       double delta, const PointMatrix& reference,
                                       std::vector<GwtCoefficients>* thresholded = nullptr,
                                       ThresholdMode mode = ThresholdMode::Entrywise);

// Per-scale mean Euclidean norm of the wavelet blocks (index = scale; 0 holds the root block).
std::vector<double> mean_coefficient_magnitude(const std::vector<GwtCoefficients>& coeffs, int max_scale);

// Coefficient dumps. CSV columns: point_id,j,k,block_index,value.
std::string coefficients_to_csv(const std::vector<GwtCoefficients>& coeffs);
// Binary: "GMRACF01", u64 model_id, u64 ambient_dim, u64 count; per point: f64 residual_norm,
// u64 path length; per block: i64 j, i64 k, u64 dim, dim x f64.
void save_coefficients(const std::vector<GwtCoefficients>& coeffs, const std::string& path);
std::vector<GwtCoefficients> load_coefficients(const std::string& path);

}  // namespace gmra
