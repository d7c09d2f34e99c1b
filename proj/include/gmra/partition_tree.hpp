#pragma once

#include "gmra/point_cloud.hpp"
#include "gmra/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gmra {

enum class SplitMethod { IteratedPCA, IteratedKMeans };

const char* to_string(SplitMethod m);
SplitMethod split_method_from_string(const std::string& s);

struct StoppingRule {
  int min_cell_size = 0;     // cells with at most this many points are leaves; 0 = max(10, 2*working_dim)
  int max_scale = 30;        // J_max
  double homogeneity = 0.0;  // leaf if the covariance tail beyond working_dim is <= this; off when 0
  int working_dim = 2;

  int effective_min_cell_size() const;
};

struct SplitOptions {
  // Number of binary sub-splits applied per scale; a cell gets up to 2^splits_per_scale children.
  int splits_per_scale = 1;
  // IteratedPCA cuts along this principal direction (1 = top).
  int pca_component = 1;
  int kmeans_iterations = 100;
};

struct CellNode {
  NodeId id;
  int parent = -1;            // index into PartitionTree::nodes
  std::vector<int> children;  // indices into PartitionTree::nodes
  std::vector<Index> points;  // row indices into the cloud, ascending
  Vector center;

  bool is_leaf() const { return children.empty(); }
  Index size() const { return static_cast<Index>(points.size()); }
};

class PartitionTree {
 public:
  std::vector<CellNode> nodes;  // breadth-first; nodes[0] is the root
  int max_scale = 0;
  SplitMethod method = SplitMethod::IteratedPCA;
  std::uint64_t seed = 0;
  StoppingRule stop;
  SplitOptions split;
  Index n_points = 0;
  Index ambient_dim = 0;

  // Derived indexes; rebuilt by rebuild_indexes().
  std::vector<int> leaf_of_point;
  std::vector<std::vector<int>> by_scale;  // by_scale[j][k] = node index

  int index_of(NodeId id) const;  // throws NodeNotFound
  const CellNode& node(NodeId id) const { return nodes[static_cast<std::size_t>(index_of(id))]; }
  bool contains(NodeId id) const;
  std::vector<int> path_to(int node) const;  // root first
  std::vector<int> leaves() const;
  std::vector<int> leaves_at_scale_or_above(int j) const;  // cells forming the scale-j partition
  // Node covering point i at scale j (its leaf if the leaf is coarser than j).
  int cell_at_scale(Index point, int j) const;
  void rebuild_indexes();
};

PartitionTree build_tree(const PointCloud& cloud, SplitMethod method, const StoppingRule& stop,
                         std::uint64_t seed, const SplitOptions& split = {});

struct ScaleRadius {
  int j = 0;
  Index cells = 0;
  double max_radius = 0.0;
  double mean_radius = 0.0;
};

std::vector<ScaleRadius> cell_diameter_stats(const PartitionTree& tree, const PointCloud& cloud);

// JSON text with nodes keyed "j,k" (parent, children, points, center).
std::string tree_to_json(const PartitionTree& tree);
PartitionTree tree_from_json(const std::string& text);

}  // namespace gmra
