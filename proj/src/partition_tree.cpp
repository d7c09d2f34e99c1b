#include "gmra/partition_tree.hpp"

#include "gmra/linalg.hpp"
#include "gmra/parallel.hpp"
#include "gmra/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gmra {

const char* to_string(SplitMethod m) {
  return m == SplitMethod::IteratedPCA ? "pca" : "kmeans";
}

SplitMethod split_method_from_string(const std::string& s) {
  if (s == "pca" || s == "IteratedPCA") return SplitMethod::IteratedPCA;
  if (s == "kmeans" || s == "IteratedKMeans") return SplitMethod::IteratedKMeans;
  throw GmraError(ErrorCode::ConfigError, "unknown split method '" + s + "' (expected pca or kmeans)");
}

int StoppingRule::effective_min_cell_size() const {
  if (min_cell_size > 0) return min_cell_size;
  return std::max(10, 2 * working_dim);
}

int PartitionTree::index_of(NodeId id) const {
  if (id.j >= 0 && id.j < static_cast<int>(by_scale.size()) && id.k >= 0 &&
      id.k < static_cast<int>(by_scale[static_cast<std::size_t>(id.j)].size()))
    return by_scale[static_cast<std::size_t>(id.j)][static_cast<std::size_t>(id.k)];
  throw GmraError(ErrorCode::NodeNotFound, "no cell " + to_string(id));
}

bool PartitionTree::contains(NodeId id) const {
  return id.j >= 0 && id.j < static_cast<int>(by_scale.size()) && id.k >= 0 &&
         id.k < static_cast<int>(by_scale[static_cast<std::size_t>(id.j)].size());
}

std::vector<int> PartitionTree::path_to(int node) const {
  std::vector<int> path;
  for (int v = node; v >= 0; v = nodes[static_cast<std::size_t>(v)].parent) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<int> PartitionTree::leaves() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].is_leaf()) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> PartitionTree::leaves_at_scale_or_above(int j) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& nd = nodes[i];
    if (nd.id.j == j || (nd.id.j < j && nd.is_leaf())) out.push_back(static_cast<int>(i));
  }
  return out;
}

int PartitionTree::cell_at_scale(Index point, int j) const {
  int v = leaf_of_point[static_cast<std::size_t>(point)];
  while (nodes[static_cast<std::size_t>(v)].id.j > j) v = nodes[static_cast<std::size_t>(v)].parent;
  return v;
}

void PartitionTree::rebuild_indexes() {
  by_scale.clear();
  max_scale = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& nd = nodes[i];
    max_scale = std::max(max_scale, nd.id.j);
    if (static_cast<int>(by_scale.size()) <= nd.id.j) by_scale.resize(static_cast<std::size_t>(nd.id.j) + 1);
    auto& row = by_scale[static_cast<std::size_t>(nd.id.j)];
    if (static_cast<int>(row.size()) <= nd.id.k) row.resize(static_cast<std::size_t>(nd.id.k) + 1, -1);
    row[static_cast<std::size_t>(nd.id.k)] = static_cast<int>(i);
  }
  leaf_of_point.assign(static_cast<std::size_t>(n_points), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].is_leaf())
      for (Index p : nodes[i].points) leaf_of_point[static_cast<std::size_t>(p)] = static_cast<int>(i);
}

namespace {

using Part = std::vector<Index>;

bool zero_spread(const PointMatrix& X, const Part& part) {
  for (std::size_t i = 1; i < part.size(); ++i)
    if (X.row(part[i]) != X.row(part[0])) return false;
  return true;
}

// Returns {left, right}; either may be empty when the cell cannot be cut.
std::pair<Part, Part> pca_cut(const PointMatrix& X, const Part& part, int component) {
  LocalPca pca = local_pca(X, part, component);
  if (pca.directions.cols() == 0) return {part, {}};
  Vector v = pca.directions.col(pca.directions.cols() - 1);
  if (pca.directions.cols() < component) v = pca.directions.col(0);
  Part left, right;
  for (Index r : part) {
    double s = (X.row(r).transpose() - pca.center).dot(v);
    (s <= 0.0 ? left : right).push_back(r);
  }
  return {std::move(left), std::move(right)};
}

std::pair<Part, Part> kmeans_cut(const PointMatrix& X, const Part& part, int iterations, Rng& rng) {
  const std::size_t m = part.size();
  Vector c0 = X.row(part[rng.below(m)]).transpose();
  Index far = part[0];
  double best = -1.0;
  for (Index r : part) {
    double d = (X.row(r).transpose() - c0).squaredNorm();
    if (d > best) {
      best = d;
      far = r;
    }
  }
  Vector c1 = X.row(far).transpose();
  std::vector<char> side(m, 0);
  for (int it = 0; it < iterations; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < m; ++i) {
      Vector x = X.row(part[i]).transpose();
      char s = (x - c1).squaredNorm() < (x - c0).squaredNorm() ? 1 : 0;
      if (s != side[i]) {
        side[i] = s;
        changed = true;
      }
    }
    if (!changed) break;
    Vector s0 = Vector::Zero(X.cols()), s1 = Vector::Zero(X.cols());
    std::size_t n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (side[i]) {
        s1 += X.row(part[i]).transpose();
        ++n1;
      } else {
        s0 += X.row(part[i]).transpose();
        ++n0;
      }
    }
    if (n0 == 0 || n1 == 0) break;
    c0 = s0 / static_cast<double>(n0);
    c1 = s1 / static_cast<double>(n1);
  }
  Part left, right;
  for (std::size_t i = 0; i < m; ++i) (side[i] ? right : left).push_back(part[i]);
  return {std::move(left), std::move(right)};
}

std::vector<Part> split_cell(const PointMatrix& X, const CellNode& cell, const PartitionTree& tree) {
  const int m0 = tree.stop.effective_min_cell_size();
  if (cell.size() <= m0 || cell.id.j >= tree.stop.max_scale) return {};
  if (zero_spread(X, cell.points)) return {};
  if (tree.stop.homogeneity > 0.0) {
    LocalPca pca = local_pca(X, cell.points, 0);
    if (pca.spectrum.tail(tree.stop.working_dim) <= tree.stop.homogeneity) return {};
  }
  Rng rng(mix_seed(tree.seed, static_cast<std::uint64_t>(cell.id.j), static_cast<std::uint64_t>(cell.id.k)));
  std::vector<Part> parts{cell.points};
  for (int round = 0; round < std::max(1, tree.split.splits_per_scale); ++round) {
    std::vector<Part> next;
    for (Part& p : parts) {
      if (static_cast<int>(p.size()) <= m0 || (round > 0 && zero_spread(X, p))) {
        next.push_back(std::move(p));
        continue;
      }
      auto [l, r] = tree.method == SplitMethod::IteratedPCA
                        ? pca_cut(X, p, std::max(1, tree.split.pca_component))
                        : kmeans_cut(X, p, tree.split.kmeans_iterations, rng);
      if (l.empty() || r.empty()) {
        next.push_back(std::move(p));
      } else {
        next.push_back(std::move(l));
        next.push_back(std::move(r));
      }
    }
    parts = std::move(next);
  }
  if (parts.size() < 2) return {};
  return parts;
}

}  // namespace

PartitionTree build_tree(const PointCloud& cloud, SplitMethod method, const StoppingRule& stop,
                         std::uint64_t seed, const SplitOptions& split) {
  if (cloud.n() < 1) throw GmraError(ErrorCode::EmptyInput, "cannot build a tree over an empty cloud");
  if (!cloud.coords.allFinite()) throw GmraError(ErrorCode::SpecError, "cloud contains non-finite values");
  const PointMatrix& X = cloud.coords;
  PartitionTree tree;
  tree.method = method;
  tree.seed = seed;
  tree.stop = stop;
  tree.split = split;
  tree.n_points = cloud.n();
  tree.ambient_dim = cloud.dim();

  CellNode root;
  root.id = {0, 0};
  root.points.resize(static_cast<std::size_t>(cloud.n()));
  for (Index i = 0; i < cloud.n(); ++i) root.points[static_cast<std::size_t>(i)] = i;
  root.center = mean_of(X);
  tree.nodes.push_back(std::move(root));

  std::vector<int> level{0};
  int j = 0;
  while (!level.empty()) {
    std::vector<std::vector<Part>> splits(level.size());
    parallel_for(0, level.size(), [&](std::size_t i) {
      splits[i] = split_cell(X, tree.nodes[static_cast<std::size_t>(level[i])], tree);
    });
    std::vector<int> next;
    int k = 0;
    for (std::size_t i = 0; i < level.size(); ++i) {
      for (Part& p : splits[i]) {
        CellNode child;
        child.id = {j + 1, k++};
        child.parent = level[i];
        child.center = mean_of(X, p);
        child.points = std::move(p);
        std::sort(child.points.begin(), child.points.end());
        int idx = static_cast<int>(tree.nodes.size());
        tree.nodes[static_cast<std::size_t>(level[i])].children.push_back(idx);
        tree.nodes.push_back(std::move(child));
        next.push_back(idx);
      }
    }
    level = std::move(next);
    ++j;
  }
  tree.rebuild_indexes();
  return tree;
}

std::vector<ScaleRadius> cell_diameter_stats(const PartitionTree& tree, const PointCloud& cloud) {
  std::vector<ScaleRadius> out(tree.by_scale.size());
  for (std::size_t j = 0; j < tree.by_scale.size(); ++j) {
    ScaleRadius& s = out[j];
    s.j = static_cast<int>(j);
    s.cells = static_cast<Index>(tree.by_scale[j].size());
    double sum = 0.0;
    for (int idx : tree.by_scale[j]) {
      const CellNode& nd = tree.nodes[static_cast<std::size_t>(idx)];
      double r = 0.0;
      for (Index p : nd.points) r = std::max(r, (cloud.coords.row(p).transpose() - nd.center).norm());
      s.max_radius = std::max(s.max_radius, r);
      sum += r;
    }
    s.mean_radius = s.cells ? sum / static_cast<double>(s.cells) : 0.0;
  }
  return out;
}

std::string tree_to_json(const PartitionTree& tree) {
  nlohmann::ordered_json j;
  j["format"] = "gmra-tree";
  j["version"] = 1;
  j["method"] = to_string(tree.method);
  j["seed"] = tree.seed;
  j["n"] = tree.n_points;
  j["ambient_dim"] = tree.ambient_dim;
  j["max_scale"] = tree.max_scale;
  j["stop"] = {{"min_cell_size", tree.stop.min_cell_size},
               {"max_scale", tree.stop.max_scale},
               {"homogeneity", tree.stop.homogeneity},
               {"working_dim", tree.stop.working_dim}};
  j["split"] = {{"splits_per_scale", tree.split.splits_per_scale},
                {"pca_component", tree.split.pca_component},
                {"kmeans_iterations", tree.split.kmeans_iterations}};
  nlohmann::ordered_json nodes = nlohmann::ordered_json::object();
  for (const CellNode& nd : tree.nodes) {
    nlohmann::ordered_json e;
    if (nd.parent >= 0)
      e["parent"] = to_string(tree.nodes[static_cast<std::size_t>(nd.parent)].id);
    else
      e["parent"] = nullptr;
    auto children = nlohmann::ordered_json::array();
    for (int c : nd.children) children.push_back(to_string(tree.nodes[static_cast<std::size_t>(c)].id));
    e["children"] = children;
    e["points"] = nd.points;
    e["center"] = std::vector<double>(nd.center.data(), nd.center.data() + nd.center.size());
    nodes[to_string(nd.id)] = std::move(e);
  }
  j["nodes"] = std::move(nodes);
  return j.dump(1);
}

namespace {

NodeId parse_key(const std::string& key) {
  auto comma = key.find(',');
  if (comma == std::string::npos) throw GmraError(ErrorCode::ParseError, "bad node key '" + key + "'");
  return {std::stoi(key.substr(0, comma)), std::stoi(key.substr(comma + 1))};
}

}  // namespace

PartitionTree tree_from_json(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw GmraError(ErrorCode::ParseError, std::string("tree JSON: ") + e.what());
  }
  if (j.value("format", "") != "gmra-tree") throw GmraError(ErrorCode::ParseError, "not a tree JSON document");
  PartitionTree tree;
  try {
    tree.method = split_method_from_string(j.at("method").get<std::string>());
    tree.seed = j.at("seed").get<std::uint64_t>();
    tree.n_points = j.at("n").get<Index>();
    tree.ambient_dim = j.at("ambient_dim").get<Index>();
    const auto& st = j.at("stop");
    tree.stop.min_cell_size = st.at("min_cell_size").get<int>();
    tree.stop.max_scale = st.at("max_scale").get<int>();
    tree.stop.homogeneity = st.at("homogeneity").get<double>();
    tree.stop.working_dim = st.at("working_dim").get<int>();
    const auto& sp = j.at("split");
    tree.split.splits_per_scale = sp.at("splits_per_scale").get<int>();
    tree.split.pca_component = sp.at("pca_component").get<int>();
    tree.split.kmeans_iterations = sp.at("kmeans_iterations").get<int>();
    std::vector<std::string> keys;
    for (auto it = j.at("nodes").begin(); it != j.at("nodes").end(); ++it) {
      CellNode nd;
      nd.id = parse_key(it.key());
      nd.points = it.value().at("points").get<std::vector<Index>>();
      auto c = it.value().at("center").get<std::vector<double>>();
      nd.center = Eigen::Map<Vector>(c.data(), static_cast<Index>(c.size()));
      tree.nodes.push_back(std::move(nd));
      keys.push_back(it.key());
    }
    tree.rebuild_indexes();
    std::size_t i = 0;
    for (auto it = j.at("nodes").begin(); it != j.at("nodes").end(); ++it, ++i) {
      const auto& par = it.value().at("parent");
      if (!par.is_null()) tree.nodes[i].parent = tree.index_of(parse_key(par.get<std::string>()));
      for (const auto& ch : it.value().at("children"))
        tree.nodes[i].children.push_back(tree.index_of(parse_key(ch.get<std::string>())));
    }
  } catch (const GmraError&) {
    throw;
  } catch (const std::exception& e) {
    throw GmraError(ErrorCode::ParseError, std::string("tree JSON: ") + e.what());
  }
  tree.rebuild_indexes();
  return tree;
}

}  // namespace gmra
