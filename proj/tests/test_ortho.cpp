#include "gmra/ortho.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace gmra;
using namespace gmra::testing;

namespace {

PartitionTree tree_of(const PointCloud& c) { return build_tree(c, SplitMethod::IteratedPCA, {}, 0); }

// Explicit cumulative basis along the path to node idx.
Matrix cumulative(const OrthoGmraModel& m, int idx) {
  std::vector<int> path = m.tree.path_to(idx);
  Index cols = 0;
  for (int p : path) cols += m.node_at(p).u.cols();
  Matrix S(m.ambient_dim(), cols);
  Index at = 0;
  for (int p : path) {
    const Matrix& u = m.node_at(p).u;
    S.middleCols(at, u.cols()) = u;
    at += u.cols();
  }
  return S;
}

PointCloud band_cloud(Index n, Index D) {
  GeneratorSpec s;
  s.kind = GeneratorKind::BandLimited;
  s.n = n;
  s.D = D;
  s.max_frequency = 15;
  s.seed = 4;
  return generate(s);
}

}  // namespace

TEST(OrthoConstruct, FlatDataStopsAtRoot) {
  Rng rng(11);
  PointCloud c = flat_cloud(2000, 3, 50, rng);
  OrthoGmraModel m = construct_ortho(c, tree_of(c), DimensionPolicy::fixed(3), 1e-6);
  ASSERT_EQ(m.nodes.size(), 1u);
  EXPECT_EQ(m.nodes[0].dim(), 3);
  // A point on the plane is carried by the root block alone.
  Vector a(3);
  a << 0.3, -1.0, 2.0;
  Vector x = m.nodes[0].center + m.nodes[0].u * a;
  OrthoCoefficients q = ortho_fgwt(m, x);
  ASSERT_EQ(q.blocks.size(), 1u);
  EXPECT_LT((q.blocks[0] - a).norm(), 1e-12);
  EXPECT_LT(q.residual_norm, 1e-9);
}

TEST(OrthoConstruct, BentCurveNeverExceedsAmbient) {
  // Two straight segments meeting at a corner in R^3, slightly lifted out of plane.
  const Index n = 800;
  PointMatrix X(n, 3);
  for (Index i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / (n - 1);
    if (t < 0.5) X.row(i) << t, 0.0, 0.1 * t * t;
    else X.row(i) << 0.5, t - 0.5, 0.1 * t * t;
  }
  PointCloud c(X);
  OrthoGmraModel m = construct_ortho(c, tree_of(c), DimensionPolicy::fixed(1), 0.0);
  EXPECT_GT(m.max_scale(), 0);
  for (int leaf : m.tree.leaves()) {
    Index sum = 0;
    for (int p : m.path(leaf)) sum += m.node_at(p).dim();
    EXPECT_LE(sum, 3);
    EXPECT_EQ(sum, m.node_at(leaf).cum_dim);
  }
}

TEST(OrthoConstruct, PathOrthogonalityAndNesting) {
  PointCloud c = manifold(GeneratorKind::SwissRoll, 3000, 30, 1, 0.05);
  OrthoGmraModel m = construct_ortho(c, tree_of(c), DimensionPolicy::fixed(2), 0.01);
  EXPECT_LT(max_path_cross_gram(m), 1e-8);
  for (std::size_t i = 1; i < m.nodes.size(); ++i) {
    const OrthoNode& nd = m.nodes[i];
    const OrthoNode& par = m.node_at(nd.parent);
    EXPECT_GE(nd.cum_dim, par.cum_dim);
    EXPECT_EQ(nd.cum_dim, par.cum_dim + nd.dim());
    Matrix S = cumulative(m, nd.parent);
    Vector dc = nd.center - par.center;
    EXPECT_LT((nd.w - (dc - S * (S.transpose() * dc))).norm(), 1e-10 * (1 + dc.norm()));
  }
}

TEST(OrthoConstruct, StoppedCellsMeetPrecision) {
  PointCloud c = manifold(GeneratorKind::SManifold, 3000, 20, 2, 0.02);
  PartitionTree t = tree_of(c);
  for (DimensionPolicy pol : {DimensionPolicy::fixed(1), DimensionPolicy::relative(0.2)}) {
    const double eps = 0.03;
    OrthoGmraModel m = construct_ortho(c, t, pol, eps);
    int checked = 0;
    for (int leaf : m.tree.leaves()) {
      const OrthoNode& nd = m.node_at(leaf);
      const CellNode& cell = m.tree.nodes[static_cast<std::size_t>(leaf)];
      double spread = 0.0;
      for (Index p : cell.points) spread += (c.point(p) - nd.center).squaredNorm();
      spread /= static_cast<double>(cell.size());
      // Leaves that were cut by the precision test satisfy it; leaves of the input tree may not.
      bool input_leaf = true;
      for (const CellNode& src : t.nodes)
        if (src.points == cell.points) input_leaf = src.is_leaf();
      if (input_leaf) continue;
      EXPECT_LE(nd.residual_ms, ortho_cell_bound(pol, eps, spread));
      ++checked;
    }
    EXPECT_GT(checked, 0);
  }
}

TEST(OrthoTransform, BlocksAndPartialSumsMatchOracle) {
  PointCloud c = manifold(GeneratorKind::Oscillating2DWave, 2000, 20, 3, 0.02);
  OrthoGmraModel m = construct_ortho(c, tree_of(c), DimensionPolicy::fixed(2), 1e-3);
  ASSERT_GT(m.max_scale(), 1);
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    Vector x = c.point(static_cast<Index>(rng.below(c.n()))) + 0.1 * random_matrix(20, 1, rng).col(0);
    int leaf = ortho_assign_leaf(m, x);
    OrthoCoefficients q = ortho_fgwt(m, x, leaf);
    std::vector<int> path = m.path(leaf);
    for (std::size_t t = 0; t < path.size(); ++t) {
      const OrthoNode& nd = m.node_at(path[t]);
      EXPECT_LT((q.blocks[t] - nd.u.transpose() * (x - nd.center)).norm(), 1e-10 * (1 + x.norm()));
      Matrix S = cumulative(m, path[t]);
      Vector s = nd.center + S * (S.transpose() * (x - nd.center));
      EXPECT_LT((ortho_igwt_partial(m, q, t) - s).norm(), 1e-10 * (1 + x.norm()));
      if (t > 0) {
        // Nested subspaces about a fixed center.
        Matrix Sp = cumulative(m, path[t - 1]);
        Vector coarse = nd.center + Sp * (Sp.transpose() * (x - nd.center));
        EXPECT_LE((x - s).norm(), (x - coarse).norm() + 1e-12);
      }
    }
    EXPECT_NEAR(q.residual_norm, (x - ortho_igwt(m, q)).norm(), 1e-10 * (1 + x.norm()));
  }
}

TEST(OrthoTransform, CoefficientRoundTrip) {
  PointCloud c = manifold(GeneratorKind::SwissRoll, 2000, 20, 5, 0.05);
  OrthoGmraModel m = construct_ortho(c, tree_of(c), DimensionPolicy::fixed(1), 1e-3);
  Rng rng(13);
  for (int leaf : m.tree.leaves()) {
    OrthoCoefficients q = ortho_fgwt(m, c.point(0), leaf);
    for (Vector& b : q.blocks) b = random_matrix(b.size(), 1, rng).col(0);
    OrthoCoefficients back = ortho_fgwt(m, ortho_igwt(m, q), leaf);
    for (std::size_t t = 0; t < q.blocks.size(); ++t) EXPECT_LT((back.blocks[t] - q.blocks[t]).norm(), 1e-10);
  }
}

TEST(OrthoTransform, ZeroBlocksGiveTranslationChain) {
  PointCloud c = manifold(GeneratorKind::SwissRoll, 1500, 10);
  OrthoGmraModel m = construct_ortho(c, tree_of(c), DimensionPolicy::fixed(1), 1e-4);
  int leaf = m.tree.leaves().back();
  OrthoCoefficients q = ortho_fgwt(m, c.point(0), leaf);
  Vector expect = Vector::Zero(10);
  for (int p : m.path(leaf)) expect += m.node_at(p).w;
  for (Vector& b : q.blocks) b.setZero();
  EXPECT_LT((ortho_igwt(m, q) - expect).norm(), 1e-12);
}

TEST(OrthoTransform, FlatTrainingPointsExact) {
  Rng rng(14);
  PointCloud c = flat_cloud(1000, 2, 20, rng);
  OrthoGmraModel m = construct_ortho(c, tree_of(c), DimensionPolicy::fixed(1), 0.0);
  for (const auto& q : ortho_fgwt_all(m, c)) EXPECT_LT(q.residual_norm, 1e-9);
}

TEST(OrthoTransform, Errors) {
  PointCloud a = manifold(GeneratorKind::SwissRoll, 1000, 10, 1);
  PointCloud b = manifold(GeneratorKind::SwissRoll, 1000, 10, 2);
  OrthoGmraModel ma = construct_ortho(a, tree_of(a), DimensionPolicy::fixed(1), 1e-3);
  OrthoGmraModel mb = construct_ortho(b, tree_of(b), DimensionPolicy::fixed(1), 1e-3);
  OrthoCoefficients q = ortho_fgwt(ma, a.point(0));
  try {
    ortho_igwt(mb, q);
    FAIL();
  } catch (const GmraError& e) {
    EXPECT_EQ(e.code(), ErrorCode::ModelMismatch);
  }
  try {
    ortho_fgwt(ma, Vector::Zero(3));
    FAIL();
  } catch (const GmraError& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimMismatch);
  }
}

TEST(OrthoBandLimited, FrequenciesSortedCoarseToFine) {
  PointCloud c = band_cloud(3000, 64);
  OrthoGmraModel m = construct_ortho(c, tree_of(c), DimensionPolicy::relative(0.5), 0.01);
  EXPECT_LT(max_path_cross_gram(m), 1e-8);
  std::vector<double> f = dominant_frequency_by_scale(m);
  std::vector<double> seen;
  for (double v : f)
    if (v >= 0) seen.push_back(v);
  ASSERT_GE(seen.size(), 3u);
  int good = 0;
  for (std::size_t i = 1; i < seen.size(); ++i) good += seen[i] >= seen[i - 1];
  EXPECT_GE(good, static_cast<int>(0.9 * static_cast<double>(seen.size() - 1)));
}

TEST(DominantFrequency, PureTones) {
  const Index D = 40;
  for (int f : {0, 1, 5, 19, 20}) {
    Vector v(D);
    for (Index i = 0; i < D; ++i) v(i) = std::cos(2.0 * 3.141592653589793 * f * static_cast<double>(i) / D + 0.3);
    EXPECT_EQ(dominant_frequency(v), f);
  }
}

TEST(OrthoThreshold, ZeroInfinityAndMonotone) {
  PointCloud c = manifold(GeneratorKind::SwissRoll, 1500, 20, 6, 0.05);
  OrthoGmraModel m = construct_ortho(c, tree_of(c), DimensionPolicy::fixed(2), 1e-3);
  auto cs = ortho_fgwt_all(m, c);
  ThresholdReport r0 = ortho_threshold(m, cs, 0.0, c.coords);
  EXPECT_EQ(r0.kept, r0.total);
  for (std::size_t i = 0; i < cs.size(); ++i) EXPECT_NEAR(r0.errors[i], cs[i].residual_norm, 1e-9);
  Index prev = r0.kept;
  for (double d : {1e-3, 1e-2, 1e-1, 1.0, 1e300}) {
    ThresholdReport r = ortho_threshold(m, cs, d, c.coords);
    EXPECT_LE(r.kept, prev);
    prev = r.kept;
  }
  Index root_entries = 0;
  for (const auto& q : cs) root_entries += q.blocks[0].size();
  EXPECT_EQ(prev, root_entries);
}
