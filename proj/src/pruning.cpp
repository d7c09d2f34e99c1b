#include "gmra/pruning.hpp"

#include "gmra/io_util.hpp"
#include "gmra/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace gmra {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Leaf: return "leaf";
    case Strategy::ParentOnly: return "parent_only";
    case Strategy::ChildrenOnly: return "children_only";
    case Strategy::Wavelet: return "wavelet";
  }
  return "unknown";
}

namespace {

void require_nonneg(Index v, const char* what) {
  if (v < 0) throw GmraError(ErrorCode::CostModelViolation, std::string(what) + " is negative");
}

}  // namespace

EncodingCost leaf_cost(Index n, Index d_eps, Index D) {
  require_nonneg(n, "cell size");
  require_nonneg(d_eps, "dimension");
  require_nonneg(D, "ambient dimension");
  EncodingCost c;
  c.coefficient_cost = n * d_eps;
  c.dictionary_cost = D * d_eps + D;
  c.strategy = Strategy::Leaf;
  return c.finish();
}

EncodingCost parent_only_cost(Index n, Index d_eps, Index D) {
  EncodingCost c = leaf_cost(n, d_eps, D);
  c.strategy = Strategy::ParentOnly;
  return c;
}

EncodingCost children_only_cost(const std::vector<EncodingCost>& children) {
  EncodingCost c;
  for (const EncodingCost& k : children) {
    c.coefficient_cost += k.coefficient_cost;
    c.dictionary_cost += k.dictionary_cost;
  }
  c.strategy = Strategy::ChildrenOnly;
  return c.finish();
}

EncodingCost wavelet_cost(const std::vector<WaveletChild>& children, Index n_parent, Index d_w, Index d_cap,
                          Index D) {
  require_nonneg(n_parent, "parent size");
  require_nonneg(d_w, "parent wavelet dimension");
  require_nonneg(d_cap, "intersection dimension");
  require_nonneg(D, "ambient dimension");
  EncodingCost c;
  for (const WaveletChild& k : children) {
    if (!k.attached) {
      c.coefficient_cost += k.phi.coefficient_cost;
      c.dictionary_cost += k.phi.dictionary_cost;
      continue;
    }
    require_nonneg(k.d, "child dimension");
    require_nonneg(k.d_perp, "child specific dimension");
    require_nonneg(k.n, "child size");
    if (k.d_perp > k.d)
      throw GmraError(ErrorCode::CostModelViolation, "child specific wavelet dimension " + std::to_string(k.d_perp) +
                                                         " exceeds the child dimension " + std::to_string(k.d));
    const Index drop = k.d - k.d_perp;
    c.coefficient_cost += k.phi.coefficient_cost - drop * k.n;
    c.dictionary_cost += k.phi.dictionary_cost - drop * D + D;  // + translation
  }
  c.coefficient_cost += n_parent * (d_w + d_cap);
  c.dictionary_cost += D * (d_w + d_cap) + D;
  c.strategy = Strategy::Wavelet;
  c.wavelet_dim = static_cast<int>(d_w);
  c.shared_dim = static_cast<int>(d_cap);
  return c.finish();
}

int epsilon_dimension(const Spectrum& s, double eps, int max_dim) {
  const double bound = eps * eps;
  int d = 0;
  while (d < max_dim && s.tail(d) > bound) ++d;
  return d;
}

EncodingCost PrunedForest::total_cost() const {
  EncodingCost c;
  for (int r : roots) {
    c.coefficient_cost += nodes[static_cast<std::size_t>(r)].cost.coefficient_cost;
    c.dictionary_cost += nodes[static_cast<std::size_t>(r)].cost.dictionary_cost;
  }
  c.strategy = roots.size() == 1 ? nodes[static_cast<std::size_t>(roots[0])].cost.strategy : Strategy::ChildrenOnly;
  return c.finish();
}

std::array<Index, 4> PrunedForest::strategy_histogram() const {
  std::array<Index, 4> h{};
  for (const ForestNode& nd : nodes) ++h[static_cast<std::size_t>(nd.strategy)];
  return h;
}

namespace {

struct WaveletTrial {
  EncodingCost cost;
  Matrix phi_eff;
  std::vector<char> attached;
  std::vector<Matrix> specific;
  Index n_att = 0;
};

WaveletTrial try_wavelet(const CellNode& cell, const std::vector<NodeDecision>& dec,
                         const Matrix& phi_w, Index D, const PruneOptions& opt) {
  WaveletTrial t;
  const std::size_t m = cell.children.size();
  t.attached.assign(m, 0);
  t.specific.resize(m);
  std::vector<Matrix> psi(m);
  std::vector<SubspaceBasis> att_psi;
  SubspaceBasis pw(phi_w);
  for (std::size_t k = 0; k < m; ++k) {
    const NodeDecision& c = dec[static_cast<std::size_t>(cell.children[k])];
    if (!c.attachable) continue;
    t.attached[k] = 1;
    psi[k] = orthonormal_complement_projection(pw, c.phi_eff, opt.rank_tol).basis;
    att_psi.emplace_back(psi[k]);
    t.n_att += c.n_coded;
  }
  SubspaceBasis cap = SubspaceBasis::empty(D);
  if (att_psi.size() >= 2) cap = subspace_intersection(att_psi, opt.intersection_tol);
  std::vector<WaveletChild> terms(m);
  for (std::size_t k = 0; k < m; ++k) {
    const NodeDecision& c = dec[static_cast<std::size_t>(cell.children[k])];
    terms[k].phi = c.cost;
    terms[k].attached = t.attached[k] != 0;
    if (!t.attached[k]) continue;
    t.specific[k] = cap.dim() > 0 ? orthonormal_complement_projection(cap, psi[k], opt.rank_tol).basis : psi[k];
    terms[k].d = c.phi_eff.cols();
    terms[k].d_perp = t.specific[k].cols();
    terms[k].n = c.n_coded;
  }
  t.cost = wavelet_cost(terms, t.n_att, phi_w.cols(), cap.dim(), D);
  t.phi_eff.resize(D, phi_w.cols() + cap.dim());
  t.phi_eff << phi_w, cap.basis;
  return t;
}

void decide(const PointCloud& cloud, const PartitionTree& T, std::vector<NodeDecision>& dec, int idx, double eps,
            const PruneOptions& opt) {
  const CellNode& cell = T.nodes[static_cast<std::size_t>(idx)];
  const Index D = cloud.dim();
  NodeDecision& d = dec[static_cast<std::size_t>(idx)];
  LocalPca pca = local_pca(cloud.coords, cell.points, D, opt.rank_tol);
  d.d_eps = epsilon_dimension(pca.spectrum, eps, static_cast<int>(pca.directions.cols()));
  d.phi_eps = pca.directions.leftCols(d.d_eps);
  d.processed = true;
  if (cell.is_leaf()) {
    d.cost = leaf_cost(cell.size(), d.d_eps, D);
    d.attachable = true;
    d.n_coded = cell.size();
    d.phi_eff = d.phi_eps;
    return;
  }
  d.parent_only = parent_only_cost(cell.size(), d.d_eps, D);
  std::vector<EncodingCost> kids;
  for (int ch : cell.children) kids.push_back(dec[static_cast<std::size_t>(ch)].cost);
  d.children_only = children_only_cost(kids);

  WaveletTrial best;
  bool have = false;
  for (int dw = 0; dw <= d.d_eps; ++dw) {
    WaveletTrial t = try_wavelet(cell, dec, pca.directions.leftCols(dw), D, opt);
    d.wavelet.push_back(t.cost);
    if (!have || t.cost.total < best.cost.total) {
      best = std::move(t);
      have = true;
    }
  }

  // Preference on ties: ParentOnly, then ChildrenOnly, then Wavelet with the smallest d^w.
  if (d.parent_only.total <= d.children_only.total && d.parent_only.total <= best.cost.total) {
    d.cost = d.parent_only;
    d.attachable = true;
    d.n_coded = cell.size();
    d.phi_eff = d.phi_eps;
  } else if (d.children_only.total <= best.cost.total) {
    d.cost = d.children_only;
    d.attachable = false;
    d.n_coded = 0;
    d.phi_eff = Matrix(D, 0);
  } else {
    d.cost = best.cost;
    d.attachable = true;
    d.n_coded = best.n_att;
    d.phi_eff = std::move(best.phi_eff);
    d.child_attached = std::move(best.attached);
    d.child_specific = std::move(best.specific);
  }
}

}  // namespace

PrunedForest prune(const PointCloud& cloud, const PartitionTree& T, double eps, const PruneOptions& opt) {
  if (cloud.n() != T.n_points || cloud.dim() != T.ambient_dim)
    throw GmraError(ErrorCode::DimMismatch, "tree was not built over this cloud");
  if (!(eps > 0.0)) throw GmraError(ErrorCode::ConfigError, "pruning precision must be positive");
  PrunedForest F;
  F.epsilon = eps;
  F.ambient_dim = cloud.dim();
  F.decisions.resize(T.nodes.size());
  for (int j = static_cast<int>(T.by_scale.size()) - 1; j >= 0; --j) {
    const auto& row = T.by_scale[static_cast<std::size_t>(j)];
    parallel_for(0, row.size(), [&](std::size_t i) {
      if (row[i] >= 0) decide(cloud, T, F.decisions, row[i], eps, opt);
    });
  }

  F.coding_node.assign(static_cast<std::size_t>(cloud.n()), -1);
  std::function<void(int, int, const Matrix*)> visit = [&](int idx, int parent, const Matrix* specific) {
    const CellNode& cell = T.nodes[static_cast<std::size_t>(idx)];
    const NodeDecision& d = F.decisions[static_cast<std::size_t>(idx)];
    if (d.cost.strategy == Strategy::ChildrenOnly) {
      for (int ch : cell.children) visit(ch, -1, nullptr);
      return;
    }
    const int me = static_cast<int>(F.nodes.size());
    ForestNode nd;
    nd.id = cell.id;
    nd.cell = idx;
    nd.parent = parent;
    nd.strategy = d.cost.strategy;
    nd.n_points = cell.size();
    nd.n_coded = d.n_coded;
    nd.center = cell.center;
    nd.cost = d.cost;
    if (parent >= 0) {
      nd.translation = cell.center - F.nodes[static_cast<std::size_t>(parent)].center;
      nd.basis = *specific;
      F.nodes[static_cast<std::size_t>(parent)].children.push_back(me);
    } else {
      nd.basis = d.phi_eff;
      F.roots.push_back(me);
    }
    F.nodes.push_back(std::move(nd));
    if (d.cost.strategy != Strategy::Wavelet) {
      for (Index p : cell.points) F.coding_node[static_cast<std::size_t>(p)] = me;
      return;
    }
    for (std::size_t k = 0; k < cell.children.size(); ++k) {
      if (d.child_attached[k]) visit(cell.children[k], me, &d.child_specific[k]);
      else visit(cell.children[k], -1, nullptr);
    }
  };
  visit(0, -1, nullptr);
  return F;
}

EncodingCost forest_actual_cost(const PrunedForest& F) {
  const Index D = F.ambient_dim;
  EncodingCost c;
  for (const ForestNode& nd : F.nodes) {
    c.dictionary_cost += D + D * nd.basis.cols();
    if (nd.parent >= 0) c.dictionary_cost += D;
  }
  for (int leaf : F.coding_node)
    for (int v = leaf; v >= 0; v = F.nodes[static_cast<std::size_t>(v)].parent)
      c.coefficient_cost += F.nodes[static_cast<std::size_t>(v)].basis.cols();
  return c.finish();
}

PointMatrix forest_reconstruct(const PrunedForest& F, const PointCloud& cloud) {
  const Index D = cloud.dim();
  std::vector<Matrix> Q(F.nodes.size());
  std::vector<char> coding(F.nodes.size(), 0);
  for (int v : F.coding_node)
    if (v >= 0) coding[static_cast<std::size_t>(v)] = 1;
  parallel_for(0, F.nodes.size(), [&](std::size_t v) {
    if (!coding[v]) return;
    Index cols = 0;
    for (int a = static_cast<int>(v); a >= 0; a = F.nodes[static_cast<std::size_t>(a)].parent)
      cols += F.nodes[static_cast<std::size_t>(a)].basis.cols();
    Matrix B(D, cols);
    Index at = 0;
    for (int a = static_cast<int>(v); a >= 0; a = F.nodes[static_cast<std::size_t>(a)].parent) {
      const Matrix& b = F.nodes[static_cast<std::size_t>(a)].basis;
      B.middleCols(at, b.cols()) = b;
      at += b.cols();
    }
    Q[v] = orthonormalize(B, 1e-10).basis;
  });
  PointMatrix out(cloud.n(), D);
  parallel_for(0, static_cast<std::size_t>(cloud.n()), [&](std::size_t i) {
    int v = F.coding_node[i];
    if (v < 0) throw GmraError(ErrorCode::CostModelViolation, "point " + std::to_string(i) + " is not covered");
    const ForestNode& nd = F.nodes[static_cast<std::size_t>(v)];
    Vector y = cloud.point(static_cast<Index>(i)) - nd.center;
    out.row(static_cast<Index>(i)) = (nd.center + Q[static_cast<std::size_t>(v)] * (Q[static_cast<std::size_t>(v)].transpose() * y)).transpose();
  });
  return out;
}

EncodingCost plain_gmra_cost(const PointCloud& cloud, const PartitionTree& T, double eps, double rank_tol) {
  const Index D = cloud.dim();
  std::vector<EncodingCost> cost(T.nodes.size());
  std::vector<Matrix> phi(T.nodes.size());
  for (int j = static_cast<int>(T.by_scale.size()) - 1; j >= 0; --j) {
    const auto& row = T.by_scale[static_cast<std::size_t>(j)];
    parallel_for(0, row.size(), [&](std::size_t i) {
      const int idx = row[i];
      if (idx < 0) return;
      const CellNode& cell = T.nodes[static_cast<std::size_t>(idx)];
      LocalPca pca = local_pca(cloud.coords, cell.points, D, rank_tol);
      int d = epsilon_dimension(pca.spectrum, eps, static_cast<int>(pca.directions.cols()));
      phi[static_cast<std::size_t>(idx)] = pca.directions.leftCols(d);
      if (cell.is_leaf()) {
        cost[static_cast<std::size_t>(idx)] = leaf_cost(cell.size(), d, D);
        return;
      }
      SubspaceBasis pb(phi[static_cast<std::size_t>(idx)]);
      std::vector<WaveletChild> terms;
      for (int ch : cell.children) {
        const Matrix& pk = phi[static_cast<std::size_t>(ch)];
        WaveletChild w;
        w.phi = cost[static_cast<std::size_t>(ch)];
        w.d = pk.cols();
        w.d_perp = orthonormal_complement_projection(pb, pk, rank_tol).dim();
        w.n = T.nodes[static_cast<std::size_t>(ch)].size();
        terms.push_back(w);
      }
      cost[static_cast<std::size_t>(idx)] = wavelet_cost(terms, cell.size(), d, 0, D);
    });
  }
  return cost[0];
}

namespace {

// Centered data and its right singular vectors (columns of the numerical rank).
struct GlobalSvd {
  PointMatrix Y;
  Vector center;
  Matrix V;
};

GlobalSvd global_svd(const PointCloud& cloud) {
  GlobalSvd g;
  g.center = mean_of(cloud.coords);
  g.Y = cloud.coords.rowwise() - g.center.transpose();
  std::vector<Index> all(static_cast<std::size_t>(cloud.n()));
  for (Index i = 0; i < cloud.n(); ++i) all[static_cast<std::size_t>(i)] = i;
  LocalPca pca = local_pca(cloud.coords, all, cloud.dim());
  g.V = pca.directions;
  return g;
}

double relative_term(double err2, double norm2) {
  if (norm2 > 0.0) return err2 / norm2;
  return err2 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

}  // namespace

std::vector<CostPoint> svd_baseline(const PointCloud& cloud, int max_rank) {
  const Index n = cloud.n(), D = cloud.dim();
  GlobalSvd g = global_svd(cloud);
  Index R = g.V.cols();
  if (max_rank >= 0) R = std::min<Index>(R, max_rank);
  std::vector<double> norm2(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) norm2[static_cast<std::size_t>(i)] = cloud.coords.row(i).squaredNorm();
  PointMatrix res = g.Y;
  std::vector<CostPoint> out;
  for (Index r = 0; r <= R; ++r) {
    CostPoint p;
    p.parameter = static_cast<double>(r);
    p.cost.coefficient_cost = n * r;
    p.cost.dictionary_cost = D * r + D;
    p.cost.strategy = Strategy::ParentOnly;
    p.cost.finish();
    double s = 0.0, rel = 0.0;
    for (Index i = 0; i < n; ++i) {
      double e2 = res.row(i).squaredNorm();
      s += e2;
      rel += relative_term(e2, norm2[static_cast<std::size_t>(i)]);
    }
    p.rms_error = std::sqrt(s / static_cast<double>(n));
    p.relative_error = std::sqrt(rel / static_cast<double>(n));
    out.push_back(p);
    if (r < R) {
      Vector coef = res * g.V.col(r);
      res.noalias() -= coef * g.V.col(r).transpose();
    }
  }
  return out;
}

std::vector<CostPoint> svd_threshold_baseline(const PointCloud& cloud, const std::vector<double>& deltas) {
  const Index n = cloud.n(), D = cloud.dim();
  GlobalSvd g = global_svd(cloud);
  const Index R = g.V.cols();
  Matrix A = g.Y * g.V;  // n x R
  PointMatrix base = g.Y - A * g.V.transpose();
  std::vector<double> base2(static_cast<std::size_t>(n)), norm2(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    base2[static_cast<std::size_t>(i)] = base.row(i).squaredNorm();
    norm2[static_cast<std::size_t>(i)] = cloud.coords.row(i).squaredNorm();
  }
  std::vector<CostPoint> out;
  for (double delta : deltas) {
    CostPoint p;
    p.parameter = delta;
    Index nnz = 0, used = 0;
    std::vector<double> dropped(static_cast<std::size_t>(n), 0.0);
    for (Index c = 0; c < R; ++c) {
      bool any = false;
      for (Index i = 0; i < n; ++i) {
        double a = A(i, c);
        if (std::abs(a) < delta) {
          dropped[static_cast<std::size_t>(i)] += a * a;
        } else {
          ++nnz;
          any = true;
        }
      }
      used += any;
    }
    double s = 0.0, rel = 0.0;
    for (Index i = 0; i < n; ++i) {
      double e2 = base2[static_cast<std::size_t>(i)] + dropped[static_cast<std::size_t>(i)];
      s += e2;
      rel += relative_term(e2, norm2[static_cast<std::size_t>(i)]);
    }
    p.cost.coefficient_cost = nnz;
    p.cost.dictionary_cost = D * used + D;
    p.cost.strategy = Strategy::ParentOnly;
    p.cost.finish();
    p.rms_error = std::sqrt(s / static_cast<double>(n));
    p.relative_error = std::sqrt(rel / static_cast<double>(n));
    out.push_back(p);
  }
  return out;
}

double rms_error(const PointCloud& cloud, const PointMatrix& approx) {
  if (approx.rows() != cloud.n() || approx.cols() != cloud.dim())
    throw GmraError(ErrorCode::DimMismatch, "approximation has the wrong shape");
  return std::sqrt((cloud.coords - approx).squaredNorm() / static_cast<double>(cloud.n()));
}

double relative_rms_error(const PointCloud& cloud, const PointMatrix& approx) {
  if (approx.rows() != cloud.n() || approx.cols() != cloud.dim())
    throw GmraError(ErrorCode::DimMismatch, "approximation has the wrong shape");
  double s = 0.0;
  for (Index i = 0; i < cloud.n(); ++i)
    s += relative_term((cloud.coords.row(i) - approx.row(i)).squaredNorm(), cloud.coords.row(i).squaredNorm());
  return std::sqrt(s / static_cast<double>(cloud.n()));
}

std::string cost_curve_csv(const std::vector<CostPoint>& rows) {
  std::ostringstream o;
  o << "parameter,coefficient_cost,dictionary_cost,total_cost,rms_error,relative_error,leaf,parent_only,children_only,wavelet\n";
  for (const CostPoint& p : rows) {
    o << format_double(p.parameter) << ',' << p.cost.coefficient_cost << ',' << p.cost.dictionary_cost << ','
      << p.cost.total << ',' << format_double(p.rms_error) << ',' << format_double(p.relative_error);
    for (Index h : p.histogram) o << ',' << h;
    o << '\n';
  }
  return o.str();
}

}  // namespace gmra
