#pragma once

#include "gmra/transforms.hpp"

#include <string>
#include <vector>

namespace gmra {

// Nearest finest-scale center (exact scan); ties go to the smaller k.
NodeId assign_leaf(const GmraModel& model, const Vector& x);

struct OosExpansion {
  int leaf = -1;
  GwtCoefficients in_model;  // coefficients of P_J(x)
  // normal[t] for depth t >= 1 lives in the wavelet basis of path[t]; normal[0] in the root
  // scaling basis.
  std::vector<Vector> normal;
  // ||e_J||, then the residual after each projection in the order W_J, ..., W_1, V_0.
  std::vector<double> residuals;
  double residual_norm = 0.0;
};

OosExpansion expand_oos(const GmraModel& model, const Vector& x);
std::vector<OosExpansion> expand_oos_all(const GmraModel& model, const PointCloud& queries);

// P_J(x) plus all normal components.
Vector reconstruct_oos(const GmraModel& model, const OosExpansion& e);

// point_id,part,j,k,block_index,value with part "model" or "normal".
std::string oos_blocks_csv(const std::vector<OosExpansion>& ex);
// point_id,leaf_j,leaf_k,model_residual,final_residual
std::string oos_residuals_csv(const std::vector<OosExpansion>& ex);

}  // namespace gmra
