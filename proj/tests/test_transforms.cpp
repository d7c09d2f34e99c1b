#include "gmra/transforms.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

using namespace gmra;
using namespace gmra::testing;

namespace {

struct Fixture {
  PointCloud cloud;
  GmraModel model;
};

Fixture swiss(Index n = 3000, Index D = 20, bool tangential = true, bool split = false) {
  Fixture f{manifold(GeneratorKind::SwissRoll, n, D, 2, 0.01), {}};
  GmraOptions o;
  o.tangential_corrections = tangential;
  o.split_shared_wavelets = split;
  f.model = build_model(f.cloud, DimensionPolicy::fixed(2), 1, o);
  return f;
}

Vector leaf_projection(const GmraModel& m, int leaf, const Vector& x) {
  return scaling_projection(m, m.node_at(leaf).id, x);
}

}  // namespace

TEST(Fgwt, BlocksMatchDirectProjections) {
  Fixture f = swiss();
  const GmraModel& m = f.model;
  for (Index i = 0; i < f.cloud.n(); i += 37) {
    Vector x = f.cloud.point(i);
    int leaf = m.leaf_of_point(i);
    GwtCoefficients c = fgwt(m, x, leaf);
    std::vector<int> path = m.path(leaf);
    ASSERT_EQ(c.blocks.size(), path.size());
    Vector xJ = leaf_projection(m, leaf, x);
    const GmraNode& root = m.node_at(path[0]);
    EXPECT_LT((c.blocks[0] - root.phi.transpose() * (xJ - root.center)).norm(), 1e-9);
    for (std::size_t t = 1; t < path.size(); ++t) {
      const GmraNode& nd = m.node_at(path[t]);
      EXPECT_EQ(c.path[t], nd.id);
      Vector xt = scaling_projection(m, nd.id, xJ);
      EXPECT_LT((c.blocks[t] - nd.psi.transpose() * (xt - nd.center)).norm(), 1e-9 * (1 + x.norm()));
    }
    EXPECT_NEAR(c.residual_norm, (x - xJ).norm(), 1e-9);
  }
}

TEST(Fgwt, FlatDataAtLeafCenter) {
  Rng rng(7);
  PointCloud c = flat_cloud(2000, 2, 15, rng);
  GmraModel m = build_model(c, DimensionPolicy::fixed(2));
  for (int leaf : m.tree.leaves()) {
    const GmraNode& nd = m.node_at(leaf);
    GwtCoefficients co = fgwt(m, nd.center, leaf);
    const GmraNode& root = m.nodes[0];
    EXPECT_LT((co.blocks[0] - root.phi.transpose() * (nd.center - root.center)).norm(), 1e-9);
    for (std::size_t t = 1; t < co.blocks.size(); ++t) EXPECT_EQ(co.blocks[t].size(), 0);
  }
}

TEST(Fgwt, RoundTripEqualsLeafProjection) {
  for (bool tang : {true, false})
    for (bool split : {false, true}) {
      Fixture f = swiss(2500, 20, tang, split);
      Rng rng(8);
      for (int trial = 0; trial < 60; ++trial) {
        Vector x = f.cloud.point(static_cast<Index>(rng.below(f.cloud.n())));
        x += 0.05 * random_matrix(x.size(), 1, rng).col(0);
        int leaf = assign_leaf_index(f.model, x);
        GwtCoefficients c = fgwt(f.model, x, leaf);
        Vector r = igwt(f.model, c);
        EXPECT_LT((r - leaf_projection(f.model, leaf, x)).norm(), 1e-9 * (1 + x.norm()))
            << "tangential=" << tang << " split=" << split;
      }
    }
}

TEST(Fgwt, TrainingRoundTripBatch) {
  Fixture f = swiss();
  auto cs = fgwt_all(f.model, f.cloud);
  PointMatrix r = igwt_all(f.model, cs);
  for (Index i = 0; i < f.cloud.n(); ++i) {
    Vector xJ = leaf_projection(f.model, f.model.leaf_of_point(i), f.cloud.point(i));
    ASSERT_LT((r.row(i).transpose() - xJ).norm(), 1e-9);
  }
}

TEST(Igwt, ZeroCoefficientsGiveTranslations) {
  Fixture f = swiss(2000, 20, false);
  int leaf = f.model.tree.leaves().front();
  GwtCoefficients c = fgwt(f.model, f.cloud.point(0), leaf);
  for (auto& b : c.blocks) b.setZero();
  Vector expect = f.model.nodes[0].center;
  for (std::size_t t = 1; t < c.path.size(); ++t) expect += f.model.node(c.path[t]).w;
  EXPECT_LT((igwt(f.model, c) - expect).norm(), 1e-10);
}

TEST(Igwt, TruncationWithoutTangentialMatchesRecursion) {
  Fixture f = swiss(3000, 20, false);
  const GmraModel& m = f.model;
  for (Index i = 0; i < f.cloud.n(); i += 53) {
    Vector x = f.cloud.point(i);
    int leaf = m.leaf_of_point(i);
    std::vector<int> path = m.path(leaf);
    // x~_J = x_J, x~_{j} = P_j(x~_{j+1}).
    std::vector<Vector> tilde(path.size());
    tilde.back() = leaf_projection(m, leaf, x);
    for (int t = static_cast<int>(path.size()) - 2; t >= 0; --t)
      tilde[static_cast<std::size_t>(t)] = scaling_projection(m, m.node_at(path[static_cast<std::size_t>(t)]).id, tilde[static_cast<std::size_t>(t) + 1]);
    GwtCoefficients c = fgwt(m, x, leaf);
    for (std::size_t t = 0; t < path.size(); ++t) {
      int j = m.node_at(path[t]).id.j;
      EXPECT_LT((igwt_to_scale(m, c, j) - tilde[t]).norm(), 1e-9 * (1 + x.norm())) << j;
    }
  }
}

TEST(Igwt, TruncationWithTangentialGivesCoarseProjection) {
  Fixture f = swiss(3000, 20, true);
  const GmraModel& m = f.model;
  for (Index i = 0; i < f.cloud.n(); i += 53) {
    Vector x = f.cloud.point(i);
    int leaf = m.leaf_of_point(i);
    Vector xJ = leaf_projection(m, leaf, x);
    GwtCoefficients c = fgwt(m, x, leaf);
    for (std::size_t t = 0; t < c.path.size(); ++t) {
      Vector xj = scaling_projection(m, c.path[t], xJ);
      EXPECT_LT((igwt_to_scale(m, c, c.path[t].j) - xj).norm(), 1e-9 * (1 + x.norm()));
    }
  }
}

TEST(Igwt, MismatchedModelRejected) {
  Fixture a = swiss(1500, 20), b = swiss(1600, 20);
  GwtCoefficients c = fgwt(a.model, a.cloud.point(0));
  try {
    igwt(b.model, c);
    FAIL();
  } catch (const GmraError& e) {
    EXPECT_EQ(e.code(), ErrorCode::ModelMismatch);
  }
  EXPECT_THROW(fgwt(a.model, Vector::Zero(7)), GmraError);
}

TEST(Fgwt, CoefficientLengthBound) {
  Fixture f = swiss(4000, 20);
  Index dmax = 0;
  for (const auto& nd : f.model.nodes) dmax = std::max(dmax, nd.dim());
  for (const auto& c : fgwt_all(f.model, f.cloud)) {
    int J = c.path.back().j;
    EXPECT_LE(c.total_size(), f.model.nodes[0].dim() + J * dmax);
  }
}

TEST(AssignLeaf, LinearScanOracle) {
  Fixture f = swiss(2000, 20);
  const GmraModel& m = f.model;
  Rng rng(9);
  auto leaves = m.tree.leaves();
  for (int trial = 0; trial < 200; ++trial) {
    Vector x = 15.0 * random_matrix(20, 1, rng).col(0);
    double best = std::numeric_limits<double>::infinity();
    int arg = -1;
    for (int l : leaves) {
      double d = (x - m.node_at(l).center).squaredNorm();
      if (d < best) best = d, arg = l;
    }
    int got = assign_leaf_index(m, x);
    EXPECT_NEAR((x - m.node_at(got).center).squaredNorm(), best, 1e-9);
    EXPECT_EQ(got, arg);
  }
  int l0 = leaves.front();
  EXPECT_EQ(assign_leaf_index(m, m.node_at(l0).center), l0);
}

TEST(AssignLeaf, TieGoesToSmallerIndex) {
  PointMatrix X(4, 1);
  X << -2, -1, 1, 2;
  PointCloud c(X);
  GmraModel m = construct_gmra(c, two_level_tree(c, {{0, 1}, {2, 3}}), DimensionPolicy::fixed(1));
  EXPECT_EQ(m.node_at(assign_leaf_index(m, Vector::Zero(1))).id, (NodeId{1, 0}));
}

TEST(Threshold, ZeroAndInfinity) {
  Fixture f = swiss();
  auto cs = fgwt_all(f.model, f.cloud);
  ThresholdReport r0 = threshold_coefficients(f.model, cs, 0.0, f.cloud.coords);
  EXPECT_EQ(r0.kept, r0.total);
  EXPECT_DOUBLE_EQ(r0.ratio, 1.0);
  for (Index i = 0; i < f.cloud.n(); ++i) EXPECT_NEAR(r0.errors[static_cast<std::size_t>(i)], cs[static_cast<std::size_t>(i)].residual_norm, 1e-9);

  std::vector<GwtCoefficients> out;
  ThresholdReport ri = threshold_coefficients(f.model, cs, std::numeric_limits<double>::infinity(), f.cloud.coords, &out);
  Index root_entries = 0;
  for (const auto& c : cs) root_entries += c.blocks[0].size();
  EXPECT_EQ(ri.kept, root_entries);
  double sq = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t t = 1; t < out[i].blocks.size(); ++t) EXPECT_EQ(out[i].blocks[t].norm(), 0.0);
    double e = (f.cloud.point(static_cast<Index>(i)) - igwt(f.model, out[i])).norm();
    EXPECT_NEAR(ri.errors[i], e, 1e-9);
    sq += e * e;
  }
  EXPECT_NEAR(ri.rms_error, std::sqrt(sq / static_cast<double>(out.size())), 1e-9);
}

TEST(Threshold, MonotoneSweep) {
  Fixture f = swiss(3000, 20);
  auto cs = fgwt_all(f.model, f.cloud);
  for (ThresholdMode mode : {ThresholdMode::Entrywise, ThresholdMode::Block}) {
    Index prev = std::numeric_limits<Index>::max();
    for (double d : {0.0, 1e-4, 1e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0}) {
      ThresholdReport r = threshold_coefficients(f.model, cs, d, f.cloud.coords, nullptr, mode);
      EXPECT_LE(r.kept, prev);
      prev = r.kept;
    }
  }
}

TEST(Threshold, MeanMagnitudeDecays) {
  Fixture f = swiss(6000, 20);
  auto cs = fgwt_all(f.model, f.cloud);
  auto mags = mean_coefficient_magnitude(cs, f.model.max_scale());
  ASSERT_GT(mags.size(), 6u);
  EXPECT_LT(mags[6], mags[2]);
}

TEST(CoefficientIo, BinaryRoundTripAndCsv) {
  Fixture f = swiss(800, 10);
  auto cs = fgwt_all(f.model, f.cloud);
  auto path = std::filesystem::temp_directory_path() / "gmra_coeffs_test.bin";
  save_coefficients(cs, path.string());
  auto back = load_coefficients(path.string());
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) {
    EXPECT_EQ(back[i].path, cs[i].path);
    EXPECT_EQ(back[i].model_id, f.model.model_id);
    for (std::size_t t = 0; t < cs[i].blocks.size(); ++t) EXPECT_EQ(back[i].blocks[t], cs[i].blocks[t]);
  }
  std::string csv = coefficients_to_csv(cs);
  EXPECT_EQ(csv.rfind("point_id,j,k,block_index,value\n", 0), 0u);
  Index rows = 0;
  for (char ch : csv) rows += ch == '\n';
  Index total = 0;
  for (const auto& c : cs) total += c.total_size();
  EXPECT_EQ(rows, total + 1);
}
