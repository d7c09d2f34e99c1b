#include "gmra/ortho.hpp"

#include "gmra/io_util.hpp"
#include "gmra/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gmra {

void OrthoGmraModel::refresh_id() {
  Fnv1a h;
  h.integer(ambient_dim());
  h.integer(static_cast<std::int64_t>(nodes.size()));
  h.integer(7);  // variant tag
  for (const OrthoNode& nd : nodes) {
    h.integer(nd.id.j);
    h.integer(nd.id.k);
    h.doubles(nd.center.data(), static_cast<std::size_t>(nd.center.size()));
    h.integer(nd.u.cols());
    h.doubles(nd.u.data(), static_cast<std::size_t>(nd.u.size()));
    h.doubles(nd.w.data(), static_cast<std::size_t>(nd.w.size()));
  }
  model_id = h.value();
}

double ortho_cell_bound(const DimensionPolicy& policy, double eps, double mean_sq_spread) {
  double b = eps * eps;
  if (policy.rule.kind == PolicyKind::RelativeThreshold) b *= mean_sq_spread;
  // Round-off allowance so exactly representable cells stop even at eps = 0.
  return b + 1e-20 * (1.0 + mean_sq_spread);
}

namespace {

struct CellFit {
  double residual_ms = 0.0;
  double spread_ms = 0.0;
};

// Mean squared distance of the cell's points to c + span(S), and to c.
CellFit fit_cell(const PointMatrix& X, const std::vector<Index>& pts, const Vector& c, const Matrix& S) {
  CellFit f;
  for (Index p : pts) {
    Vector y = X.row(p).transpose() - c;
    double n2 = y.squaredNorm();
    f.spread_ms += n2;
    f.residual_ms += S.cols() > 0 ? (y - S * (S.transpose() * y)).squaredNorm() : n2;
  }
  double n = static_cast<double>(std::max<std::size_t>(pts.size(), 1));
  f.residual_ms /= n;
  f.spread_ms /= n;
  return f;
}

}  // namespace

OrthoGmraModel construct_ortho(const PointCloud& cloud, const PartitionTree& tree, const DimensionPolicy& policy,
                               double eps, double rank_tol) {
  if (cloud.n() != tree.n_points || cloud.dim() != tree.ambient_dim)
    throw GmraError(ErrorCode::DimMismatch, "tree was not built over this cloud");
  policy.validate();
  if (!(eps >= 0.0)) throw GmraError(ErrorCode::ConfigError, "precision must be nonnegative");
  const Index D = cloud.dim();
  const PointMatrix& X = cloud.coords;

  OrthoGmraModel model;
  model.policy = policy;
  model.precision = eps;
  PartitionTree& T = model.tree;
  T.n_points = tree.n_points;
  T.ambient_dim = tree.ambient_dim;
  T.method = tree.method;
  T.seed = tree.seed;
  T.stop = tree.stop;
  T.split = tree.split;

  // Level by level. parent_cum_store[slot] is the cumulative basis S of an expanded parent.
  struct Pending {
    int src;      // index in the input tree
    int parent;   // index in the output tree
  };
  std::vector<Pending> level{{0, -1}};
  std::vector<int> level_parent_slot{0};
  std::vector<Matrix> parent_cum_store{Matrix(D, 0)};
  std::vector<Vector> parent_center_store{Vector::Zero(D)};

  int j = 0;
  while (!level.empty()) {
    const std::size_t m = level.size();
    std::vector<OrthoNode> made(m);
    std::vector<Matrix> cum(m);
    std::vector<char> expand(m, 0);
    parallel_for(0, m, [&](std::size_t i) {
      const CellNode& cell = tree.nodes[static_cast<std::size_t>(level[i].src)];
      const Matrix& S = parent_cum_store[static_cast<std::size_t>(level_parent_slot[i])];
      OrthoNode& nd = made[i];
      nd.n_points = cell.size();
      nd.center = cell.center;
      LocalPca pca = local_pca(X, cell.points, D);
      int d = select_dimension(pca.spectrum, policy, cell.id.j, cell.is_leaf());
      d = std::min<int>(d, static_cast<int>(pca.directions.cols()));
      Matrix phi = pca.directions.leftCols(d);
      if (level[i].parent < 0) {
        nd.u = phi;
        nd.w = nd.center;
      } else {
        nd.u = orthonormal_complement_projection(SubspaceBasis(S), phi, rank_tol).basis;
        if (S.cols() > 0 && nd.u.cols() > 0) {
          // Re-orthogonalize against S to hold path orthogonality at round-off level.
          nd.u -= S * (S.transpose() * nd.u);
          nd.u = orthonormalize(nd.u, rank_tol).basis;
        }
        Vector dc = nd.center - parent_center_store[static_cast<std::size_t>(level_parent_slot[i])];
        nd.w = dc - S * (S.transpose() * dc);
      }
      cum[i].resize(D, S.cols() + nd.u.cols());
      cum[i] << S, nd.u;
      nd.cum_dim = static_cast<int>(cum[i].cols());
      CellFit f = fit_cell(X, cell.points, nd.center, cum[i]);
      nd.residual_ms = f.residual_ms;
      expand[i] = !cell.is_leaf() && f.residual_ms > ortho_cell_bound(policy, eps, f.spread_ms);
    });

    std::vector<Pending> next;
    std::vector<int> next_slot;
    std::vector<Matrix> next_cum;
    std::vector<Vector> next_center;
    for (std::size_t i = 0; i < m; ++i) {
      const CellNode& cell = tree.nodes[static_cast<std::size_t>(level[i].src)];
      OrthoNode& nd = made[i];
      const int out = static_cast<int>(T.nodes.size());
      if (static_cast<int>(T.by_scale.size()) <= j) T.by_scale.resize(static_cast<std::size_t>(j) + 1);
      const int k = static_cast<int>(T.by_scale[static_cast<std::size_t>(j)].size());
      T.by_scale[static_cast<std::size_t>(j)].push_back(out);
      CellNode c;
      c.id = {j, k};
      c.parent = level[i].parent;
      c.points = cell.points;
      c.center = cell.center;
      nd.id = c.id;
      nd.parent = c.parent;
      T.nodes.push_back(std::move(c));
      model.nodes.push_back(std::move(nd));
      if (level[i].parent >= 0) {
        T.nodes[static_cast<std::size_t>(level[i].parent)].children.push_back(out);
        model.nodes[static_cast<std::size_t>(level[i].parent)].children.push_back(out);
      }
      if (expand[i]) {
        int slot = static_cast<int>(next_cum.size());
        next_cum.push_back(std::move(cum[i]));
        next_center.push_back(cell.center);
        for (int ch : cell.children) {
          next.push_back({ch, out});
          next_slot.push_back(slot);
        }
      }
    }
    level = std::move(next);
    level_parent_slot = std::move(next_slot);
    parent_cum_store = std::move(next_cum);
    parent_center_store = std::move(next_center);
    ++j;
  }
  T.rebuild_indexes();
  model.refresh_id();
  return model;
}

Index OrthoCoefficients::total_size() const {
  Index s = 0;
  for (const Vector& b : blocks) s += b.size();
  return s;
}

int ortho_assign_leaf(const OrthoGmraModel& model, const Vector& x) {
  if (x.size() != model.ambient_dim()) throw GmraError(ErrorCode::DimMismatch, "point has the wrong dimension");
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < model.nodes.size(); ++i) {
    const OrthoNode& nd = model.nodes[i];
    if (!nd.is_leaf()) continue;
    double d = (x - nd.center).squaredNorm();
    if (best < 0 || d < best_d) {
      best = static_cast<int>(i);
      best_d = d;
    } else if (d == best_d) {
      const NodeId& b = model.nodes[static_cast<std::size_t>(best)].id;
      if (nd.id.k < b.k || (nd.id.k == b.k && nd.id.j < b.j)) best = static_cast<int>(i);
    }
  }
  return best;
}

OrthoCoefficients ortho_fgwt(const OrthoGmraModel& model, const Vector& x, int leaf) {
  if (x.size() != model.ambient_dim()) throw GmraError(ErrorCode::DimMismatch, "point has the wrong dimension");
  if (!model.node_at(leaf).is_leaf()) throw GmraError(ErrorCode::NotApplicable, "ortho_fgwt needs a leaf cell");
  std::vector<int> path = model.path(leaf);
  OrthoCoefficients out;
  out.model_id = model.model_id;
  out.path.resize(path.size());
  out.blocks.resize(path.size());
  Vector r = x;
  for (std::size_t t = path.size(); t-- > 0;) {
    const OrthoNode& nd = model.node_at(path[t]);
    out.path[t] = nd.id;
    out.blocks[t] = nd.u.transpose() * (r - nd.center);
    r -= nd.u * out.blocks[t] + nd.w;
  }
  out.residual_norm = r.norm();
  return out;
}

OrthoCoefficients ortho_fgwt(const OrthoGmraModel& model, const Vector& x) {
  return ortho_fgwt(model, x, ortho_assign_leaf(model, x));
}

Vector ortho_igwt_partial(const OrthoGmraModel& model, const OrthoCoefficients& c, std::size_t depth) {
  if (c.model_id != model.model_id)
    throw GmraError(ErrorCode::ModelMismatch, "coefficients were produced by a different model");
  if (c.path.size() != c.blocks.size() || c.path.empty() || depth >= c.path.size())
    throw GmraError(ErrorCode::DimMismatch, "malformed coefficient record");
  Vector x = Vector::Zero(model.ambient_dim());
  for (std::size_t t = 0; t <= depth; ++t) {
    const OrthoNode& nd = model.node(c.path[t]);
    if (c.blocks[t].size() != nd.u.cols()) throw GmraError(ErrorCode::DimMismatch, "block size does not match the basis");
    x += nd.u * c.blocks[t] + nd.w;
  }
  return x;
}

Vector ortho_igwt(const OrthoGmraModel& model, const OrthoCoefficients& c) {
  return ortho_igwt_partial(model, c, c.path.empty() ? 0 : c.path.size() - 1);
}

std::vector<OrthoCoefficients> ortho_fgwt_all(const OrthoGmraModel& model, const PointCloud& cloud) {
  std::vector<OrthoCoefficients> out(static_cast<std::size_t>(cloud.n()));
  parallel_for(0, out.size(), [&](std::size_t i) {
    out[i] = ortho_fgwt(model, cloud.point(static_cast<Index>(i)), model.leaf_of_point(static_cast<Index>(i)));
  });
  return out;
}

ThresholdReport ortho_threshold(const OrthoGmraModel& model, const std::vector<OrthoCoefficients>& coeffs,
                                double delta, const PointMatrix& reference, std::vector<OrthoCoefficients>* thresholded) {
  if (delta < 0.0) throw GmraError(ErrorCode::ConfigError, "threshold must be nonnegative");
  if (reference.rows() != static_cast<Index>(coeffs.size()) || reference.cols() != model.ambient_dim())
    throw GmraError(ErrorCode::DimMismatch, "reference points do not match the coefficients");
  ThresholdReport r;
  r.delta = delta;
  r.errors.assign(coeffs.size(), 0.0);
  std::vector<OrthoCoefficients> local;
  std::vector<OrthoCoefficients>& out = thresholded ? *thresholded : local;
  out = coeffs;
  std::vector<Index> kept(coeffs.size(), 0), total(coeffs.size(), 0);
  parallel_for(0, coeffs.size(), [&](std::size_t i) {
    OrthoCoefficients& c = out[i];
    for (std::size_t t = 0; t < c.blocks.size(); ++t) {
      total[i] += c.blocks[t].size();
      for (Index e = 0; e < c.blocks[t].size(); ++e) {
        if (t > 0 && std::abs(c.blocks[t](e)) < delta) c.blocks[t](e) = 0.0;
        else ++kept[i];
      }
    }
    r.errors[i] = (reference.row(static_cast<Index>(i)).transpose() - ortho_igwt(model, c)).norm();
  });
  double sq = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    r.kept += kept[i];
    r.total += total[i];
    sq += r.errors[i] * r.errors[i];
    r.max_error = std::max(r.max_error, r.errors[i]);
  }
  r.ratio = r.total > 0 ? static_cast<double>(r.kept) / static_cast<double>(r.total) : 1.0;
  r.rms_error = coeffs.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(coeffs.size()));
  return r;
}

double max_path_cross_gram(const OrthoGmraModel& model) {
  std::vector<double> worst(model.nodes.size(), 0.0);
  parallel_for(0, model.nodes.size(), [&](std::size_t i) {
    const OrthoNode& nd = model.nodes[i];
    if (nd.u.cols() == 0) return;
    for (int a = nd.parent; a >= 0; a = model.node_at(a).parent) {
      const OrthoNode& an = model.node_at(a);
      if (an.u.cols() == 0) continue;
      worst[i] = std::max(worst[i], (an.u.transpose() * nd.u).norm());
    }
  });
  return worst.empty() ? 0.0 : *std::max_element(worst.begin(), worst.end());
}

int dominant_frequency(const Vector& v) {
  const Index D = v.size();
  int best = 0;
  double best_mag = -1.0;
  for (Index f = 0; f <= D / 2; ++f) {
    double re = 0.0, im = 0.0;
    for (Index i = 0; i < D; ++i) {
      double a = 2.0 * std::numbers::pi * static_cast<double>(f * i) / static_cast<double>(D);
      re += v(i) * std::cos(a);
      im -= v(i) * std::sin(a);
    }
    double mag = re * re + im * im;
    if (mag > best_mag * (1.0 + 1e-12)) {
      best_mag = mag;
      best = static_cast<int>(f);
    }
  }
  return best;
}

std::vector<double> dominant_frequency_by_scale(const OrthoGmraModel& model) {
  std::vector<std::vector<int>> freqs(static_cast<std::size_t>(model.max_scale()) + 1);
  for (const OrthoNode& nd : model.nodes)
    for (Index c = 0; c < nd.u.cols(); ++c)
      freqs[static_cast<std::size_t>(nd.id.j)].push_back(dominant_frequency(nd.u.col(c)));
  std::vector<double> out;
  for (auto& f : freqs) {
    if (f.empty()) {
      out.push_back(-1.0);
      continue;
    }
    std::sort(f.begin(), f.end());
    std::size_t n = f.size();
    out.push_back(n % 2 ? f[n / 2] : 0.5 * (f[n / 2 - 1] + f[n / 2]));
  }
  return out;
}

}  // namespace gmra
