#include "gmra/partition_tree.hpp"
#include "gmra/synth.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace gmra;
using namespace gmra::testing;

namespace {

PointCloud swiss(Index n, Index D = 50, std::uint64_t seed = 1) {
  GeneratorSpec s;
  s.kind = GeneratorKind::SwissRoll;
  s.n = n;
  s.D = D;
  s.seed = seed;
  return generate(s);
}

void check_structure(const PartitionTree& t, const PointCloud& c, int max_children) {
  ASSERT_EQ(t.nodes[0].size(), c.n());
  std::vector<int> seen(static_cast<std::size_t>(c.n()), 0);
  for (int leaf : t.leaves())
    for (Index p : t.nodes[static_cast<std::size_t>(leaf)].points) ++seen[static_cast<std::size_t>(p)];
  for (int s : seen) ASSERT_EQ(s, 1);
  int maxj = 0;
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const CellNode& nd = t.nodes[i];
    maxj = std::max(maxj, nd.id.j);
    Vector m = Vector::Zero(c.dim());
    for (Index p : nd.points) m += c.point(p);
    m /= static_cast<double>(nd.size());
    EXPECT_LT((m - nd.center).norm(), 1e-10 * (1 + m.norm()));
    int nc = static_cast<int>(nd.children.size());
    EXPECT_TRUE(nc == 0 || (nc >= 2 && nc <= max_children));
    if (nc) {
      std::vector<Index> u;
      for (int ch : nd.children) {
        const CellNode& cn = t.nodes[static_cast<std::size_t>(ch)];
        EXPECT_EQ(cn.parent, static_cast<int>(i));
        EXPECT_EQ(cn.id.j, nd.id.j + 1);
        u.insert(u.end(), cn.points.begin(), cn.points.end());
      }
      std::sort(u.begin(), u.end());
      EXPECT_TRUE(u == nd.points);
    } else {
      EXPECT_TRUE(nd.is_leaf());
    }
    if (i > 0) {
      EXPECT_GE(nd.parent, 0);
    }
  }
  EXPECT_EQ(maxj, t.max_scale);
  // Partition at every scale.
  for (int j = 0; j <= t.max_scale; ++j) {
    std::vector<int> hit(static_cast<std::size_t>(c.n()), 0);
    for (int v : t.leaves_at_scale_or_above(j))
      for (Index p : t.nodes[static_cast<std::size_t>(v)].points) ++hit[static_cast<std::size_t>(p)];
    for (int h : hit) ASSERT_EQ(h, 1);
  }
}

}  // namespace

TEST(PartitionTree, IdenticalPointsNeverSplit) {
  PointMatrix X(2, 3);
  X << 1, 2, 3, 1, 2, 3;
  StoppingRule st;
  st.min_cell_size = 1;
  PartitionTree t = build_tree(PointCloud(X), SplitMethod::IteratedPCA, st, 0);
  EXPECT_EQ(t.nodes.size(), 1u);
  EXPECT_TRUE(t.nodes[0].is_leaf());
}

TEST(PartitionTree, FirstSplitFollowsTopSingularVector) {
  const double z = 1e-3;
  PointMatrix X(4, 2);
  X << -1, 0, -1, z, 1, 0, 1, z;
  StoppingRule st;
  st.min_cell_size = 1;
  st.working_dim = 1;
  PartitionTree t = build_tree(PointCloud(X), SplitMethod::IteratedPCA, st, 0);
  ASSERT_EQ(t.nodes[0].children.size(), 2u);

  // Oracle: top right-singular vector of the centered data; enumerate both sign partitions.
  Matrix Y = X.rowwise() - X.colwise().mean();
  Eigen::JacobiSVD<Matrix> svd(Y, Eigen::ComputeFullV);
  Vector v = svd.matrixV().col(0);
  std::set<Index> pos, neg;
  for (Index i = 0; i < 4; ++i) (Y.row(i).dot(v) > 0 ? pos : neg).insert(i);
  std::set<Index> a(t.nodes[1].points.begin(), t.nodes[1].points.end());
  std::set<Index> b(t.nodes[2].points.begin(), t.nodes[2].points.end());
  EXPECT_TRUE((a == pos && b == neg) || (a == neg && b == pos));
  std::set<Index> left{0, 1}, right{2, 3};
  EXPECT_TRUE((a == left && b == right) || (a == right && b == left));
}

TEST(PartitionTree, EmptyCloudThrows) {
  try {
    build_tree(PointCloud(PointMatrix(0, 3)), SplitMethod::IteratedPCA, {}, 0);
    FAIL();
  } catch (const GmraError& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}

TEST(PartitionTree, SwissRollBinaryStructureAndBalance) {
  PointCloud c = swiss(10000);
  PartitionTree t = build_tree(c, SplitMethod::IteratedPCA, {}, 0);
  check_structure(t, c, 2);
  const double n = static_cast<double>(c.n());
  for (int j = 0; j <= std::min(6, t.max_scale); ++j) {
    double target = n * std::pow(2.0, -j);
    for (int v : t.by_scale[static_cast<std::size_t>(j)]) {
      double sz = static_cast<double>(t.nodes[static_cast<std::size_t>(v)].size());
      EXPECT_LE(sz, 8 * target) << "scale " << j;
      EXPECT_GE(sz, target / 8) << "scale " << j;
    }
  }
}

TEST(PartitionTree, QuaternarySplitsStructure) {
  PointCloud c = swiss(5000);
  SplitOptions so;
  so.splits_per_scale = 2;
  PartitionTree t = build_tree(c, SplitMethod::IteratedPCA, {}, 0, so);
  check_structure(t, c, 4);
}

TEST(PartitionTree, KMeansStructureAndSeparation) {
  Rng rng(2);
  PointMatrix X(400, 5);
  for (Index i = 0; i < 400; ++i)
    for (Index k = 0; k < 5; ++k) X(i, k) = 0.1 * rng.normal() + (i < 150 ? 10.0 : -10.0);
  PointCloud c(X);
  StoppingRule st;
  st.max_scale = 1;
  PartitionTree t = build_tree(c, SplitMethod::IteratedKMeans, st, 42);
  ASSERT_EQ(t.nodes[0].children.size(), 2u);
  std::vector<Index> sizes{t.nodes[1].size(), t.nodes[2].size()};
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes[0], 150);
  EXPECT_EQ(sizes[1], 250);
  PointCloud s = swiss(3000);
  check_structure(build_tree(s, SplitMethod::IteratedKMeans, {}, 7), s, 2);
}

TEST(PartitionTree, Deterministic) {
  PointCloud c = swiss(3000);
  for (SplitMethod m : {SplitMethod::IteratedPCA, SplitMethod::IteratedKMeans}) {
    std::string a = tree_to_json(build_tree(c, m, {}, 5));
    std::string b = tree_to_json(build_tree(c, m, {}, 5));
    EXPECT_EQ(a, b);
  }
}

TEST(PartitionTree, StoppingRules) {
  PointCloud c = swiss(4000);
  StoppingRule st;
  st.max_scale = 3;
  PartitionTree t = build_tree(c, SplitMethod::IteratedPCA, st, 0);
  EXPECT_EQ(t.max_scale, 3);
  st = {};
  st.min_cell_size = 200;
  t = build_tree(c, SplitMethod::IteratedPCA, st, 0);
  for (const CellNode& nd : t.nodes)
    if (!nd.is_leaf()) EXPECT_GT(nd.size(), 200);
  // A homogeneity bound above the total variance stops at the root.
  st = {};
  st.homogeneity = 1e9;
  EXPECT_EQ(build_tree(c, SplitMethod::IteratedPCA, st, 0).nodes.size(), 1u);
  // Flat data is homogeneous beyond its dimension.
  Rng rng(1);
  PointCloud f = flat_cloud(2000, 2, 10, rng);
  st.homogeneity = 1e-12;
  EXPECT_EQ(build_tree(f, SplitMethod::IteratedPCA, st, 0).nodes.size(), 1u);
}

TEST(PartitionTree, JsonRoundTrip) {
  PointCloud c = swiss(1000);
  PartitionTree t = build_tree(c, SplitMethod::IteratedPCA, {}, 3);
  std::string s = tree_to_json(t);
  PartitionTree u = tree_from_json(s);
  EXPECT_EQ(tree_to_json(u), s);
  EXPECT_EQ(u.leaf_of_point, t.leaf_of_point);
  EXPECT_NE(s.find("\"0,0\""), std::string::npos);
}

TEST(CellDiameter, OnePointCloud) {
  PointMatrix X(1, 4);
  X << 1, 2, 3, 4;
  PointCloud c(X);
  PartitionTree t = build_tree(c, SplitMethod::IteratedPCA, {}, 0);
  for (const auto& s : cell_diameter_stats(t, c)) {
    EXPECT_EQ(s.max_radius, 0.0);
    EXPECT_EQ(s.mean_radius, 0.0);
  }
}

TEST(CellDiameter, SegmentHalvesPerScale) {
  const Index n = 4096;
  PointMatrix X(n, 1);
  for (Index i = 0; i < n; ++i) X(i, 0) = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  PointCloud c(X);
  PartitionTree t = build_tree(c, SplitMethod::IteratedPCA, {}, 0);
  auto st = cell_diameter_stats(t, c);
  ASSERT_GE(st.size(), 8u);
  for (std::size_t j = 1; j <= 7; ++j) {
    double ratio = st[j].mean_radius / st[j - 1].mean_radius;
    EXPECT_GE(ratio, 0.5 * 0.75) << j;
    EXPECT_LE(ratio, 0.5 * 1.25) << j;
  }
}

TEST(CellDiameter, SwissRollRadiusSlope) {
  PointCloud c = swiss(10000);
  SplitOptions so;
  so.splits_per_scale = 2;
  PartitionTree t = build_tree(c, SplitMethod::IteratedPCA, {}, 0, so);
  auto st = cell_diameter_stats(t, c);
  const int J = t.max_scale;
  std::vector<double> js, ys;
  for (int j = (J + 3) / 4; j <= 3 * J / 4; ++j) {
    js.push_back(j);
    ys.push_back(std::log2(st[static_cast<std::size_t>(j)].mean_radius));
  }
  double slope = fit_slope(js, ys);
  EXPECT_GE(slope, -1.4);
  EXPECT_LE(slope, -0.6);
}
