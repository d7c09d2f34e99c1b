#include "gmra/gmra.hpp"

#include "gmra/io_util.hpp"
#include "gmra/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace gmra {

const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Fixed: return "fixed";
    case PolicyKind::RelativeThreshold: return "relative";
    case PolicyKind::AbsoluteThreshold: return "absolute";
  }
  return "unknown";
}

double DimensionRule::epsilon_at(int j) const {
  if (schedule.empty()) return epsilon;
  std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(std::max(j, 0)), schedule.size() - 1);
  return schedule[i];
}

DimensionPolicy DimensionPolicy::fixed(int d) {
  DimensionPolicy p;
  p.rule.kind = PolicyKind::Fixed;
  p.rule.fixed_dim = d;
  return p;
}

DimensionPolicy DimensionPolicy::relative(double eps) {
  DimensionPolicy p;
  p.rule.kind = PolicyKind::RelativeThreshold;
  p.rule.epsilon = eps;
  return p;
}

DimensionPolicy DimensionPolicy::relative_default() {
  DimensionPolicy p = relative(0.5);
  DimensionRule leaf;
  leaf.kind = PolicyKind::RelativeThreshold;
  leaf.epsilon = 0.05;
  p.leaf = leaf;
  return p;
}

DimensionPolicy DimensionPolicy::absolute(double eps) {
  DimensionPolicy p;
  p.rule.kind = PolicyKind::AbsoluteThreshold;
  p.rule.epsilon = eps;
  return p;
}

std::vector<double> DimensionPolicy::geometric_schedule(double c, double theta, double eps, int max_scale) {
  std::vector<double> s;
  double v = c;
  for (int j = 0; j <= max_scale; ++j, v *= theta) s.push_back(std::max(v, eps));
  return s;
}

namespace {

void validate_rule(const DimensionRule& r) {
  auto check_eps = [&](double e) {
    if (r.kind == PolicyKind::RelativeThreshold && !(e > 0.0 && e <= 1.0))
      throw GmraError(ErrorCode::ConfigError, "relative threshold must lie in (0, 1]");
    if (r.kind == PolicyKind::AbsoluteThreshold && !(e > 0.0))
      throw GmraError(ErrorCode::ConfigError, "absolute threshold must be positive");
  };
  if (r.kind == PolicyKind::Fixed) {
    if (r.fixed_dim < 1) throw GmraError(ErrorCode::ConfigError, "fixed dimension must be >= 1");
    return;
  }
  if (r.schedule.empty()) check_eps(r.epsilon);
  for (double e : r.schedule) check_eps(e);
}

}  // namespace

void DimensionPolicy::validate() const {
  validate_rule(rule);
  if (leaf) validate_rule(*leaf);
}

int numerical_rank(const Spectrum& s, double rel_tol) {
  if (s.size() == 0 || !(s.values(0) > 0.0)) return 0;
  int r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s.values(i) > rel_tol * s.values(0)) ++r;
  return r;
}

int select_dimension(const Spectrum& spectrum, const DimensionPolicy& policy, int j, bool is_leaf) {
  const DimensionRule& r = policy.rule_for(is_leaf);
  const int rank = numerical_rank(spectrum);
  int d = 0;
  if (r.kind == PolicyKind::Fixed) {
    d = std::min(r.fixed_dim, rank);
  } else {
    double eps = r.epsilon_at(j);
    double bound = r.kind == PolicyKind::RelativeThreshold ? eps * spectrum.total() : eps;
    while (d < rank && spectrum.tail(d) > bound) ++d;
  }
  if (policy.floor_at_one && rank >= 1) d = std::max(d, 1);
  return d;
}

void GmraModel::refresh_id() {
  Fnv1a h;
  auto mix_mat = [&](const Matrix& m) {
    h.integer(m.rows());
    h.integer(m.cols());
    h.doubles(m.data(), static_cast<std::size_t>(m.size()));
  };
  h.integer(ambient_dim());
  h.integer(static_cast<std::int64_t>(nodes.size()));
  h.integer(options.tangential_corrections ? 1 : 0);
  for (const GmraNode& nd : nodes) {
    h.integer(nd.id.j);
    h.integer(nd.id.k);
    mix_mat(nd.center);
    mix_mat(nd.phi);
    mix_mat(nd.psi);
    mix_mat(nd.w);
  }
  model_id = h.value();
}

void GmraModel::rebuild_caches() {
  parallel_for(0, nodes.size(), [&](std::size_t i) {
    GmraNode& nd = nodes[i];
    nd.psi_t_phi = nd.psi.transpose() * nd.phi;
    if (nd.parent >= 0) {
      const GmraNode& par = nodes[static_cast<std::size_t>(nd.parent)];
      nd.parent_phi_t_phi = par.phi.transpose() * nd.phi;
      nd.parent_phi_t_dc = par.phi.transpose() * (nd.center - par.center);
    } else {
      nd.parent_phi_t_phi.resize(0, nd.phi.cols());
      nd.parent_phi_t_dc.resize(0);
    }
    nd.anc_phi_t_phi.clear();
    nd.anc_phi_t_dc.clear();
    if (nd.is_leaf()) {
      for (int a : tree.path_to(static_cast<int>(i))) {
        const GmraNode& an = nodes[static_cast<std::size_t>(a)];
        nd.anc_phi_t_phi.push_back(an.phi.transpose() * nd.phi);
        nd.anc_phi_t_dc.push_back(an.phi.transpose() * (nd.center - an.center));
      }
    }
  });
}

GmraModel construct_gmra(const PointCloud& cloud, PartitionTree tree, const DimensionPolicy& policy,
                         double precision, const GmraOptions& options) {
  if (cloud.n() != tree.n_points || cloud.dim() != tree.ambient_dim)
    throw GmraError(ErrorCode::DimMismatch, "tree was not built over this cloud");
  policy.validate();
  GmraModel model;
  model.policy = policy;
  model.options = options;
  model.precision = precision;
  model.tree = std::move(tree);
  const PartitionTree& T = model.tree;
  const Index D = cloud.dim();
  model.nodes.resize(T.nodes.size());

  // Local PCA and scaling bases.
  parallel_for(0, T.nodes.size(), [&](std::size_t i) {
    const CellNode& cell = T.nodes[i];
    GmraNode& nd = model.nodes[i];
    nd.id = cell.id;
    nd.parent = cell.parent;
    nd.children = cell.children;
    nd.n_points = cell.size();
    LocalPca pca = local_pca(cloud.coords, cell.points, D);
    nd.center = cell.center;
    nd.spectrum = std::move(pca.spectrum);
    nd.rank = pca.numerical_rank;
    const DimensionRule& rule = policy.rule_for(cell.is_leaf());
    if (options.strict_dimension && rule.kind == PolicyKind::Fixed && rule.fixed_dim > cell.size())
      throw GmraError(ErrorCode::DimensionExceedsCell,
                      "cell " + to_string(cell.id) + " has " + std::to_string(cell.size()) +
                          " points but the policy asks for " + std::to_string(rule.fixed_dim) + " directions");
    int d = select_dimension(nd.spectrum, policy, cell.id.j, cell.is_leaf());
    d = std::min<int>(d, static_cast<int>(pca.directions.cols()));
    nd.phi = pca.directions.leftCols(d);
    nd.sigma = nd.spectrum.values.head(d);
  });

  // Wavelet bases and translations.
  parallel_for(0, T.nodes.size(), [&](std::size_t i) {
    GmraNode& nd = model.nodes[i];
    if (nd.parent < 0) {
      nd.psi = nd.phi;
      nd.w = nd.center;
      return;
    }
    const GmraNode& par = model.nodes[static_cast<std::size_t>(nd.parent)];
    SubspaceBasis pb(par.phi);
    nd.psi = orthonormal_complement_projection(pb, nd.phi, options.wavelet_rank_tol).basis;
    Vector dc = nd.center - par.center;
    nd.w = dc - par.phi * (par.phi.transpose() * dc);
  });

  if (options.split_shared_wavelets) {
    model.tree.rebuild_indexes();
    std::vector<SharedSplit> splits(T.nodes.size());
    parallel_for(0, T.nodes.size(), [&](std::size_t i) {
      if (T.nodes[i].children.size() >= 2) splits[i] = split_shared_wavelets(model, T.nodes[i].id);
    });
    for (std::size_t i = 0; i < T.nodes.size(); ++i) {
      const SharedSplit& s = splits[i];
      if (s.shared.dim() == 0) continue;
      const auto& ch = T.nodes[i].children;
      for (std::size_t c = 0; c < ch.size(); ++c) {
        GmraNode& child = model.nodes[static_cast<std::size_t>(ch[c])];
        Matrix psi(D, s.shared_in_child[c].dim() + s.specific[c].dim());
        psi << s.shared_in_child[c].basis, s.specific[c].basis;
        child.psi = std::move(psi);
        child.shared_dim = static_cast<int>(s.shared_in_child[c].dim());
      }
    }
  }

  model.rebuild_caches();
  model.refresh_id();
  return model;
}

Vector scaling_projection(const GmraModel& model, NodeId id, const Vector& x) {
  const GmraNode& nd = model.node(id);
  if (x.size() != model.ambient_dim()) throw GmraError(ErrorCode::DimMismatch, "point has the wrong dimension");
  return nd.center + nd.phi * (nd.phi.transpose() * (x - nd.center));
}

Vector wavelet_detail(const GmraModel& model, NodeId child, const Vector& x) {
  const GmraNode& nd = model.node(child);
  if (nd.parent < 0) throw GmraError(ErrorCode::NotApplicable, "the root has no parent scale");
  return scaling_projection(model, child, x) -
         scaling_projection(model, model.nodes[static_cast<std::size_t>(nd.parent)].id, x);
}

Vector projection_at_scale(const GmraModel& model, const PointCloud& cloud, Index i, int j) {
  int v = model.tree.cell_at_scale(i, j);
  const GmraNode& nd = model.node_at(v);
  Vector x = cloud.point(i);
  return nd.center + nd.phi * (nd.phi.transpose() * (x - nd.center));
}

SharedSplit split_shared_wavelets(const GmraModel& model, NodeId parent) {
  const GmraNode& par = model.node(parent);
  if (par.children.size() < 2)
    throw GmraError(ErrorCode::NotApplicable, "cell " + to_string(parent) + " has fewer than 2 children");
  std::vector<SubspaceBasis> spaces;
  for (int c : par.children) spaces.emplace_back(model.node_at(c).psi);
  SharedSplit out;
  out.shared = subspace_intersection(spaces, model.options.intersection_angle_tol);
  for (const SubspaceBasis& s : spaces) {
    if (out.shared.dim() == 0) {
      out.shared_in_child.push_back(SubspaceBasis::empty(s.ambient_dim()));
      out.specific.push_back(s);
      continue;
    }
    SubspaceBasis inside = orthonormalize(s.basis * (s.basis.transpose() * out.shared.basis), 0.5);
    out.specific.push_back(orthonormal_complement_projection(inside, s.basis, 0.5));
    out.shared_in_child.push_back(std::move(inside));
  }
  return out;
}

double approximation_error(const GmraModel& model, const PointCloud& cloud, int j, ErrorNorm norm) {
  const Index n = cloud.n();
  std::vector<double> terms(static_cast<std::size_t>(n));
  parallel_for(0, static_cast<std::size_t>(n), [&](std::size_t i) {
    Vector x = cloud.point(static_cast<Index>(i));
    double e = (x - projection_at_scale(model, cloud, static_cast<Index>(i), j)).squaredNorm();
    if (norm == ErrorNorm::L2Relative) {
      double nx = x.squaredNorm();
      e = nx > 0.0 ? e / nx : (e > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    }
    terms[i] = e;
  });
  double s = 0.0;
  for (double t : terms) s += t;
  return std::sqrt(s / static_cast<double>(n));
}

double spectral_error(const GmraModel& model, int j) {
  double s = 0.0;
  const double n = static_cast<double>(model.tree.n_points);
  for (int v : model.tree.leaves_at_scale_or_above(j)) {
    const GmraNode& nd = model.node_at(v);
    s += static_cast<double>(nd.n_points) / n * nd.spectrum.tail(nd.dim());
  }
  return std::sqrt(s);
}

std::vector<ScaleStats> scale_stats(const GmraModel& model) {
  std::vector<ScaleStats> out(model.tree.by_scale.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    ScaleStats& s = out[j];
    s.j = static_cast<int>(j);
    const auto& row = model.tree.by_scale[j];
    s.cells = static_cast<Index>(row.size());
    for (int v : row) {
      const GmraNode& nd = model.node_at(v);
      s.mean_dim += static_cast<double>(nd.dim());
      s.mean_wavelet_dim += static_cast<double>(nd.wavelet_dim());
      if (j > 0) {
        s.max_wavelet_dim = std::max<int>(s.max_wavelet_dim, static_cast<int>(nd.wavelet_dim()));
        s.max_translation = std::max(s.max_translation, nd.w.norm());
      }
    }
    if (s.cells) {
      s.mean_dim /= static_cast<double>(s.cells);
      s.mean_wavelet_dim /= static_cast<double>(s.cells);
    }
  }
  return out;
}

}  // namespace gmra
