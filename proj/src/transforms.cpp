#include "gmra/transforms.hpp"

#include "gmra/io_util.hpp"
#include "gmra/parallel.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace gmra {

Index GwtCoefficients::total_size() const {
  Index s = 0;
  for (const Vector& b : blocks) s += b.size();
  return s;
}

Index GwtCoefficients::nonzeros() const {
  Index s = 0;
  for (const Vector& b : blocks)
    for (Index i = 0; i < b.size(); ++i)
      if (b(i) != 0.0) ++s;
  return s;
}

int assign_leaf_index(const GmraModel& model, const Vector& x) {
  if (x.size() != model.ambient_dim()) throw GmraError(ErrorCode::DimMismatch, "point has the wrong dimension");
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < model.nodes.size(); ++i) {
    const GmraNode& nd = model.nodes[i];
    if (!nd.is_leaf()) continue;
    double d = (x - nd.center).squaredNorm();
    if (best < 0 || d < best_d) {
      best = static_cast<int>(i);
      best_d = d;
      continue;
    }
    if (d == best_d) {
      const NodeId& b = model.nodes[static_cast<std::size_t>(best)].id;
      if (nd.id.k < b.k || (nd.id.k == b.k && nd.id.j < b.j)) best = static_cast<int>(i);
    }
  }
  return best;
}

GwtCoefficients fgwt(const GmraModel& model, const Vector& x, int leaf) {
  if (x.size() != model.ambient_dim()) throw GmraError(ErrorCode::DimMismatch, "point has the wrong dimension");
  const GmraNode& L = model.node_at(leaf);
  if (!L.is_leaf()) throw GmraError(ErrorCode::NotApplicable, "fgwt needs a leaf cell");
  std::vector<int> path = model.path(leaf);
  const std::size_t depth = path.size();
  GwtCoefficients out;
  out.ambient_dim = model.ambient_dim();
  out.model_id = model.model_id;
  out.path.resize(depth);
  out.blocks.resize(depth);
  for (std::size_t t = 0; t < depth; ++t) out.path[t] = model.node_at(path[t]).id;

  Vector pJ = L.phi.transpose() * (x - L.center);
  out.residual_norm = (x - L.center - L.phi * pJ).norm();
  if (model.options.tangential_corrections) {
    for (std::size_t t = depth; t-- > 1;) {
      const GmraNode& nd = model.node_at(path[t]);
      Vector pt = L.anc_phi_t_phi[t] * pJ + L.anc_phi_t_dc[t];
      out.blocks[t] = nd.psi_t_phi * pt;
    }
    out.blocks[0] = L.anc_phi_t_phi[0] * pJ + L.anc_phi_t_dc[0];
  } else {
    Vector p = pJ;
    for (std::size_t t = depth; t-- > 1;) {
      const GmraNode& nd = model.node_at(path[t]);
      out.blocks[t] = nd.psi_t_phi * p;
      p = nd.parent_phi_t_phi * p + nd.parent_phi_t_dc;
    }
    out.blocks[0] = p;
  }
  return out;
}

GwtCoefficients fgwt(const GmraModel& model, const Vector& x) {
  return fgwt(model, x, assign_leaf_index(model, x));
}

namespace {

void check_coeffs(const GmraModel& model, const GwtCoefficients& c) {
  if (c.model_id != model.model_id)
    throw GmraError(ErrorCode::ModelMismatch, "coefficients were produced by a different model");
  if (c.path.size() != c.blocks.size() || c.path.empty())
    throw GmraError(ErrorCode::DimMismatch, "malformed coefficient record");
}

// Detail vectors Q_t for t = 1..depth-1 (index 0 unused) plus the coarse term.
std::vector<Vector> details(const GmraModel& model, const GwtCoefficients& c, std::vector<int>& idx,
                            Vector& coarse) {
  const std::size_t depth = c.path.size();
  idx.resize(depth);
  for (std::size_t t = 0; t < depth; ++t) idx[t] = model.tree.index_of(c.path[t]);
  const Index D = model.ambient_dim();
  std::vector<Vector> Q(depth);
  const GmraNode& root = model.node_at(idx[0]);
  if (c.blocks[0].size() != root.psi.cols()) throw GmraError(ErrorCode::DimMismatch, "root block size");
  coarse = root.psi * c.blocks[0] + root.w;
  Vector sum = Vector::Zero(D);
  for (std::size_t t = depth; t-- > 1;) {
    const GmraNode& nd = model.node_at(idx[t]);
    if (c.blocks[t].size() != nd.psi.cols()) throw GmraError(ErrorCode::DimMismatch, "wavelet block size");
    Vector q = nd.psi * c.blocks[t] + nd.w;
    if (model.options.tangential_corrections && t + 1 < depth) {
      const Matrix& pp = model.node_at(idx[t - 1]).phi;
      q -= pp * (pp.transpose() * sum);
    }
    sum += q;
    Q[t] = std::move(q);
  }
  return Q;
}

}  // namespace

Vector igwt(const GmraModel& model, const GwtCoefficients& coeffs) {
  check_coeffs(model, coeffs);
  std::vector<int> idx;
  Vector x;
  std::vector<Vector> Q = details(model, coeffs, idx, x);
  for (std::size_t t = 1; t < Q.size(); ++t) x += Q[t];
  return x;
}

Vector igwt_to_scale(const GmraModel& model, const GwtCoefficients& coeffs, int j) {
  check_coeffs(model, coeffs);
  std::vector<int> idx;
  Vector x;
  std::vector<Vector> Q = details(model, coeffs, idx, x);
  for (std::size_t t = 1; t < Q.size(); ++t)
    if (coeffs.path[t].j <= j) x += Q[t];
  return x;
}

std::vector<GwtCoefficients> fgwt_all(const GmraModel& model, const PointCloud& cloud) {
  if (cloud.dim() != model.ambient_dim()) throw GmraError(ErrorCode::DimMismatch, "cloud dimension");
  if (cloud.n() != model.tree.n_points)
    throw GmraError(ErrorCode::DimMismatch, "cloud is not the training set of this model");
  std::vector<GwtCoefficients> out(static_cast<std::size_t>(cloud.n()));
  parallel_for(0, out.size(), [&](std::size_t i) {
    out[i] = fgwt(model, cloud.point(static_cast<Index>(i)), model.leaf_of_point(static_cast<Index>(i)));
  });
  return out;
}

PointMatrix igwt_all(const GmraModel& model, const std::vector<GwtCoefficients>& coeffs) {
  PointMatrix out(static_cast<Index>(coeffs.size()), model.ambient_dim());
  parallel_for(0, coeffs.size(), [&](std::size_t i) {
    out.row(static_cast<Index>(i)) = igwt(model, coeffs[i]).transpose();
  });
  return out;
}

ThresholdReport threshold_coefficients(const GmraModel& model, const std::vector<GwtCoefficients>& coeffs,
                                       double delta, const PointMatrix& reference,
                                       std::vector<GwtCoefficients>* thresholded, ThresholdMode mode) {
  if (delta < 0.0) throw GmraError(ErrorCode::ConfigError, "threshold must be nonnegative");
  if (reference.rows() != static_cast<Index>(coeffs.size()) || reference.cols() != model.ambient_dim())
    throw GmraError(ErrorCode::DimMismatch, "reference points do not match the coefficients");
  ThresholdReport rep;
  rep.delta = delta;
  rep.errors.resize(coeffs.size());
  std::vector<GwtCoefficients> local;
  std::vector<GwtCoefficients>& out = thresholded ? *thresholded : local;
  out = coeffs;
  std::vector<Index> kept(coeffs.size()), total(coeffs.size());
  parallel_for(0, coeffs.size(), [&](std::size_t i) {
    GwtCoefficients& c = out[i];
    Index k = c.blocks[0].size(), tot = c.blocks[0].size();
    for (std::size_t t = 1; t < c.blocks.size(); ++t) {
      Vector& b = c.blocks[t];
      tot += b.size();
      if (mode == ThresholdMode::Block) {
        if (b.norm() < delta) b.setZero();
        else k += b.size();
      } else {
        for (Index e = 0; e < b.size(); ++e) {
          if (std::abs(b(e)) < delta) b(e) = 0.0;
          else ++k;
        }
      }
    }
    kept[i] = k;
    total[i] = tot;
    rep.errors[i] = (igwt(model, c) - reference.row(static_cast<Index>(i)).transpose()).norm();
  });
  double sq = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    rep.kept += kept[i];
    rep.total += total[i];
    sq += rep.errors[i] * rep.errors[i];
    rep.max_error = std::max(rep.max_error, rep.errors[i]);
  }
  rep.ratio = rep.total ? static_cast<double>(rep.kept) / static_cast<double>(rep.total) : 1.0;
  rep.rms_error = coeffs.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(coeffs.size()));
  return rep;
}

std::vector<double> mean_coefficient_magnitude(const std::vector<GwtCoefficients>& coeffs, int max_scale) {
  std::vector<double> sum(static_cast<std::size_t>(max_scale) + 1, 0.0);
  std::vector<Index> cnt(sum.size(), 0);
  for (const auto& c : coeffs) {
    for (std::size_t t = 0; t < c.blocks.size(); ++t) {
      auto j = static_cast<std::size_t>(c.path[t].j);
      if (j >= sum.size()) continue;
      sum[j] += c.blocks[t].norm();
      ++cnt[j];
    }
  }
  for (std::size_t j = 0; j < sum.size(); ++j)
    sum[j] = cnt[j] ? sum[j] / static_cast<double>(cnt[j]) : std::numeric_limits<double>::quiet_NaN();
  return sum;
}

std::string coefficients_to_csv(const std::vector<GwtCoefficients>& coeffs) {
  std::ostringstream os;
  os << "point_id,j,k,block_index,value\n";
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const auto& c = coeffs[i];
    for (std::size_t t = 0; t < c.blocks.size(); ++t)
      for (Index e = 0; e < c.blocks[t].size(); ++e)
        os << i << ',' << c.path[t].j << ',' << c.path[t].k << ',' << e << ',' << format_double(c.blocks[t](e))
           << '\n';
  }
  return os.str();
}

namespace {
constexpr char kCoeffMagic[9] = "GMRACF01";
}

void save_coefficients(const std::vector<GwtCoefficients>& coeffs, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw GmraError(ErrorCode::IoError, "cannot write " + path);
  out.write(kCoeffMagic, 8);
  write_u64(out, coeffs.empty() ? 0 : coeffs.front().model_id);
  write_u64(out, coeffs.empty() ? 0 : static_cast<std::uint64_t>(coeffs.front().ambient_dim));
  write_u64(out, coeffs.size());
  for (const auto& c : coeffs) {
    write_f64_array(out, &c.residual_norm, 1);
    write_u64(out, c.path.size());
    for (std::size_t t = 0; t < c.path.size(); ++t) {
      write_u64(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(c.path[t].j)));
      write_u64(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(c.path[t].k)));
      write_u64(out, static_cast<std::uint64_t>(c.blocks[t].size()));
      write_f64_array(out, c.blocks[t].data(), static_cast<std::size_t>(c.blocks[t].size()));
    }
  }
  if (!out) throw GmraError(ErrorCode::IoError, "write failed: " + path);
}

std::vector<GwtCoefficients> load_coefficients(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GmraError(ErrorCode::IoError, "cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCoeffMagic, 8) != 0)
    throw GmraError(ErrorCode::ParseError, path + ": not a coefficient file");
  std::uint64_t id = read_u64(in), D = read_u64(in), n = read_u64(in);
  std::vector<GwtCoefficients> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::uint64_t i = 0; i < n && in; ++i) {
    GwtCoefficients c;
    c.model_id = id;
    c.ambient_dim = static_cast<Index>(D);
    read_f64_array(in, &c.residual_norm, 1);
    std::uint64_t depth = read_u64(in);
    if (depth > 4096) throw GmraError(ErrorCode::ParseError, path + ": corrupt path length");
    for (std::uint64_t t = 0; t < depth; ++t) {
      NodeId nid{static_cast<int>(static_cast<std::int64_t>(read_u64(in))),
                 static_cast<int>(static_cast<std::int64_t>(read_u64(in)))};
      std::uint64_t dim = read_u64(in);
      if (dim > D) throw GmraError(ErrorCode::ParseError, path + ": corrupt block size");
      Vector b(static_cast<Index>(dim));
      read_f64_array(in, b.data(), static_cast<std::size_t>(dim));
      c.path.push_back(nid);
      c.blocks.push_back(std::move(b));
    }
    out.push_back(std::move(c));
  }
  if (!in) throw GmraError(ErrorCode::ParseError, path + ": truncated coefficient file");
  return out;
}

}  // namespace gmra
