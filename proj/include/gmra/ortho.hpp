#pragma once

#include "gmra/gmra.hpp"
#include "gmra/transforms.hpp"

#include <cstdint>
#include <vector>

namespace gmra {

struct OrthoNode {
  NodeId id;
  int parent = -1;
  std::vector<int> children;
  Index n_points = 0;
  Vector center;
  Matrix u;       // D x r new directions, orthogonal to every ancestor's u (root: its scaling basis)
  Vector w;       // translation (root: center)
  int cum_dim = 0;  // dimension of the cumulative subspace S at this node
  double residual_ms = 0.0;  // mean squared residual of the cell against S about the center

  Index dim() const { return u.cols(); }
  bool is_leaf() const { return children.empty(); }
};

class OrthoGmraModel {
 public:
  PartitionTree tree;  // offspring of cells that were already approximated are removed
  std::vector<OrthoNode> nodes;
  DimensionPolicy policy;
  double precision = 0.0;
  std::uint64_t model_id = 0;

  Index ambient_dim() const { return tree.ambient_dim; }
  int max_scale() const { return tree.max_scale; }
  const OrthoNode& node(NodeId id) const { return nodes[static_cast<std::size_t>(tree.index_of(id))]; }
  const OrthoNode& node_at(int idx) const { return nodes[static_cast<std::size_t>(idx)]; }
  int leaf_of_point(Index i) const { return tree.leaf_of_point[static_cast<std::size_t>(i)]; }
  std::vector<int> path(int leaf) const { return tree.path_to(leaf); }
  void refresh_id();
};

// Cell acceptance threshold on the mean squared residual: eps^2, or eps^2 times the cell's
// mean squared spread for a relative policy.
double ortho_cell_bound(const DimensionPolicy& policy, double eps, double mean_sq_spread);

OrthoGmraModel construct_ortho(const PointCloud& cloud, const PartitionTree& tree, const DimensionPolicy& policy,
                               double eps, double rank_tol = 1e-8);

struct OrthoCoefficients {
  std::vector<NodeId> path;   // root first
  std::vector<Vector> blocks;  // blocks[t] = u_t^T (x - c_t)
  std::uint64_t model_id = 0;
  double residual_norm = 0.0;  // ||x - s_J||

  Index total_size() const;
};

int ortho_assign_leaf(const OrthoGmraModel& model, const Vector& x);
OrthoCoefficients ortho_fgwt(const OrthoGmraModel& model, const Vector& x, int leaf);
OrthoCoefficients ortho_fgwt(const OrthoGmraModel& model, const Vector& x);
Vector ortho_igwt(const OrthoGmraModel& model, const OrthoCoefficients& coeffs);
// Partial sum over depths 0..depth (s at that node).
Vector ortho_igwt_partial(const OrthoGmraModel& model, const OrthoCoefficients& coeffs, std::size_t depth);

std::vector<OrthoCoefficients> ortho_fgwt_all(const OrthoGmraModel& model, const PointCloud& cloud);

// Entrywise thresholding of the non-root blocks, as for the plain transform.
ThresholdReport ortho_threshold(const OrthoGmraModel& model, const std::vector<OrthoCoefficients>& coeffs,
                                double delta, const PointMatrix& reference,
                                std::vector<OrthoCoefficients>* thresholded = nullptr);

// Largest ||u_a^T u_b||_F over distinct nodes a, b sharing a root-to-leaf path.
double max_path_cross_gram(const OrthoGmraModel& model);

// Index f in [0, D/2] maximizing the DFT magnitude of v.
int dominant_frequency(const Vector& v);
// Per scale: median dominant frequency over the u columns at that scale (-1 if none).
std::vector<double> dominant_frequency_by_scale(const OrthoGmraModel& model);

}  // namespace gmra
