#pragma once

#include "gmra/linalg.hpp"
#include "gmra/partition_tree.hpp"
#include "gmra/point_cloud.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gmra {

enum class PolicyKind { Fixed, RelativeThreshold, AbsoluteThreshold };

const char* to_string(PolicyKind k);

struct DimensionRule {
  PolicyKind kind = PolicyKind::Fixed;
  int fixed_dim = 2;
  // Threshold eps_j: schedule[j] if present (last entry repeats), else epsilon.
  double epsilon = 0.0;
  std::vector<double> schedule;

  double epsilon_at(int j) const;
};

struct DimensionPolicy {
  DimensionRule rule;
  std::optional<DimensionRule> leaf;  // used at leaves when set
  bool floor_at_one = true;           // never select 0 for a cell of positive rank

  static DimensionPolicy fixed(int d);
  static DimensionPolicy relative(double eps);
  // 50% of the variance kept at interior nodes and 95% at leaves.
  static DimensionPolicy relative_default();
  static DimensionPolicy absolute(double eps);
  // eps_j = max(c * theta^j, eps) for j = 0..max_scale.
  static std::vector<double> geometric_schedule(double c, double theta, double eps, int max_scale);

  const DimensionRule& rule_for(bool is_leaf) const { return is_leaf && leaf ? *leaf : rule; }
  void validate() const;
};

int numerical_rank(const Spectrum& s, double rel_tol = kRankTolerance);
int select_dimension(const Spectrum& spectrum, const DimensionPolicy& policy, int j, bool is_leaf = false);

struct GmraOptions {
  bool tangential_corrections = true;
  bool split_shared_wavelets = false;
  double wavelet_rank_tol = 1e-8;
  double intersection_angle_tol = 1e-8;
  // Throw DimensionExceedsCell when a Fixed(d) policy asks for more directions than a cell
  // has points. Off by default: small cells are clamped to their numerical rank.
  bool strict_dimension = false;
};

struct GmraNode {
  NodeId id;
  int parent = -1;
  std::vector<int> children;
  Index n_points = 0;

  Vector center;
  Matrix phi;         // D x d scaling basis
  Vector sigma;       // top d covariance eigenvalues
  Spectrum spectrum;  // full covariance spectrum, length D
  int rank = 0;       // numerical rank of the cell covariance

  Matrix psi;  // D x d^w wavelet basis (root: phi)
  Vector w;    // translation (root: center)
  int shared_dim = 0;  // leading psi columns spanning the part shared with siblings

  Matrix psi_t_phi;         // psi^T phi
  Matrix parent_phi_t_phi;  // phi_parent^T phi
  Vector parent_phi_t_dc;   // phi_parent^T (c - c_parent)

  // Leaves only, indexed by ancestor depth (0 = root, last = the leaf itself).
  std::vector<Matrix> anc_phi_t_phi;  // phi_a^T phi_leaf
  std::vector<Vector> anc_phi_t_dc;   // phi_a^T (c_leaf - c_a)

  Index dim() const { return phi.cols(); }
  Index wavelet_dim() const { return psi.cols(); }
  bool is_leaf() const { return children.empty(); }
};

class GmraModel {
 public:
  PartitionTree tree;
  std::vector<GmraNode> nodes;  // same indexing as tree.nodes
  DimensionPolicy policy;
  GmraOptions options;
  double precision = 0.0;
  std::uint64_t model_id = 0;

  Index ambient_dim() const { return tree.ambient_dim; }
  int max_scale() const { return tree.max_scale; }
  const GmraNode& node(NodeId id) const { return nodes[static_cast<std::size_t>(tree.index_of(id))]; }
  const GmraNode& node_at(int idx) const { return nodes[static_cast<std::size_t>(idx)]; }
  int leaf_of_point(Index i) const { return tree.leaf_of_point[static_cast<std::size_t>(i)]; }
  std::vector<int> path(int leaf) const { return tree.path_to(leaf); }
  // Recomputes model_id from the stored numbers.
  void refresh_id();
  // Rebuilds the small cached matrices used by the fast transforms.
  void rebuild_caches();
};

GmraModel construct_gmra(const PointCloud& cloud, PartitionTree tree, const DimensionPolicy& policy,
                         double precision = 0.0, const GmraOptions& options = {});

// Affine projection c + Phi Phi^T (x - c) onto the plane of cell (j,k).
Vector scaling_projection(const GmraModel& model, NodeId id, const Vector& x);

// x_{j+1} - x_j for the cell (j+1,k') and its parent, computed from the two projections.
Vector wavelet_detail(const GmraModel& model, NodeId child, const Vector& x);

// Projection of training point i at scale j (its leaf plane if the leaf is coarser).
Vector projection_at_scale(const GmraModel& model, const PointCloud& cloud, Index i, int j);

struct SharedSplit {
  SubspaceBasis shared;                // numerical intersection of the children wavelet spaces
  std::vector<SubspaceBasis> specific;  // per child: complement of the shared part in its space
  std::vector<SubspaceBasis> shared_in_child;  // shared part re-expressed inside each child space
};

SharedSplit split_shared_wavelets(const GmraModel& model, NodeId parent);

enum class ErrorNorm { L2Absolute, L2Relative };

// L2Absolute: sqrt(mean ||x - P_{M_j} x||^2). L2Relative: sqrt(mean (||x - P_{M_j} x|| / ||x||)^2).
double approximation_error(const GmraModel& model, const PointCloud& cloud, int j, ErrorNorm norm);

// sqrt(sum_k (n_k/n) sum_{l > d_k} lambda_l) over the scale-j partition.
double spectral_error(const GmraModel& model, int j);

struct ScaleStats {
  int j = 0;
  Index cells = 0;
  double mean_dim = 0.0;
  double mean_wavelet_dim = 0.0;
  int max_wavelet_dim = 0;
  double max_translation = 0.0;
};

std::vector<ScaleStats> scale_stats(const GmraModel& model);

}  // namespace gmra
