#pragma once

#include "gmra/linalg.hpp"
#include "gmra/partition_tree.hpp"
#include "gmra/point_cloud.hpp"

#include <array>
#include <string>
#include <vector>

namespace gmra {

enum class Strategy { Leaf, ParentOnly, ChildrenOnly, Wavelet };
const char* to_string(Strategy s);

// Raw number counts: coefficient slots plus dictionary scalars.
struct EncodingCost {
  Index coefficient_cost = 0;
  Index dictionary_cost = 0;
  Index total = 0;
  Strategy strategy = Strategy::Leaf;
  int wavelet_dim = 0;  // d^w of a Wavelet choice
  int shared_dim = 0;   // d^cap of a Wavelet choice

  EncodingCost& finish() {
    total = coefficient_cost + dictionary_cost;
    return *this;
  }
};

EncodingCost leaf_cost(Index n, Index d_eps, Index D);
EncodingCost parent_only_cost(Index n, Index d_eps, Index D);
EncodingCost children_only_cost(const std::vector<EncodingCost>& children);

// One child of a Wavelet candidate. `d` is the dimension of the child's top basis, `d_perp` the
// dimension of its child-specific wavelet part, `n` the number of points carrying coefficients
// on that basis. Detached children keep their cost unchanged.
struct WaveletChild {
  EncodingCost phi;
  Index d = 0;
  Index d_perp = 0;
  Index n = 0;
  bool attached = true;
};

// sum_att [phi_k - (d_k - d_perp_k)(n_k + D) + D] + sum_det phi_k + (n_parent + D)(d_w + d_cap) + D.
// Throws CostModelViolation on inconsistent dimensions.
EncodingCost wavelet_cost(const std::vector<WaveletChild>& children, Index n_parent, Index d_w, Index d_cap,
                          Index D);

// Smallest d with covariance tail <= eps^2 (mean squared residual), no floor.
int epsilon_dimension(const Spectrum& s, double eps, int max_dim);

struct PruneOptions {
  double rank_tol = 1e-8;
  double intersection_tol = 1e-8;
};

// Audit record of the choice made at one tree node.
struct NodeDecision {
  bool processed = false;
  EncodingCost cost;  // the minimum
  EncodingCost parent_only;
  EncodingCost children_only;
  std::vector<EncodingCost> wavelet;  // index d^w = 0..d_eps
  int d_eps = 0;
  bool attachable = false;  // false for ChildrenOnly
  Index n_coded = 0;        // points carrying coefficients on phi_eff
  Matrix phi_eff;           // top basis offered to the parent
  Matrix phi_eps;           // minimal-dimension PCA basis of the cell
  // Wavelet choice only, parallel to the tree node's children.
  std::vector<char> child_attached;
  std::vector<Matrix> child_specific;  // stored wavelet part of each attached child
};

struct ForestNode {
  NodeId id;
  int cell = -1;    // index into the input tree
  int parent = -1;  // index into the forest, -1 for a root
  std::vector<int> children;
  Strategy strategy = Strategy::Leaf;
  Index n_points = 0;
  Index n_coded = 0;
  Vector center;
  Vector translation;  // c - c_parent for attached nodes, empty for roots
  Matrix basis;        // stored basis: phi_eff at a root, the specific wavelet part otherwise
  EncodingCost cost;   // cost of the node's subtree as decided at the node
};

struct PrunedForest {
  std::vector<ForestNode> nodes;
  std::vector<int> roots;
  std::vector<int> coding_node;  // per point: forest node whose plane codes it
  std::vector<NodeDecision> decisions;  // indexed like the input tree
  double epsilon = 0.0;
  Index ambient_dim = 0;

  // Sum of the costs stored at the roots.
  EncodingCost total_cost() const;
  std::array<Index, 4> strategy_histogram() const;  // by Strategy over forest nodes
};

PrunedForest prune(const PointCloud& cloud, const PartitionTree& tree, double eps, const PruneOptions& opt = {});

// Independent count from the forest structure: centers, stored bases times D, translations,
// and one coefficient per point per stored basis vector on its path.
EncodingCost forest_actual_cost(const PrunedForest& forest);

// Reconstruction c + P_B(x - c), c the coding node center and B all stored bases on its path.
PointMatrix forest_reconstruct(const PrunedForest& forest, const PointCloud& cloud);

// Unpruned GMRA at precision eps: minimal-dimension planes at every node and Wavelet(d_eps)
// with no intersection splitting everywhere.
EncodingCost plain_gmra_cost(const PointCloud& cloud, const PartitionTree& tree, double eps,
                             double rank_tol = 1e-8);

struct CostPoint {
  double parameter = 0.0;  // eps, rank or delta
  EncodingCost cost;
  double rms_error = 0.0;
  double relative_error = 0.0;
  std::array<Index, 4> histogram{};  // strategy counts, zero for non-tree encoders
};

// Global PCA at every rank 0..max_rank (max_rank < 0: full), center included in the dictionary.
std::vector<CostPoint> svd_baseline(const PointCloud& cloud, int max_rank = -1);
// Full SVD coefficients thresholded at each delta; unused dictionary columns are dropped.
std::vector<CostPoint> svd_threshold_baseline(const PointCloud& cloud, const std::vector<double>& deltas);

double rms_error(const PointCloud& cloud, const PointMatrix& approx);
double relative_rms_error(const PointCloud& cloud, const PointMatrix& approx);

// Columns: parameter,coefficient_cost,dictionary_cost,total_cost,rms_error,relative_error,
// leaf,parent_only,children_only,wavelet
std::string cost_curve_csv(const std::vector<CostPoint>& rows);

}  // namespace gmra
