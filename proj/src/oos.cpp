#include "gmra/oos.hpp"

#include "gmra/io_util.hpp"
#include "gmra/parallel.hpp"

#include <sstream>

namespace gmra {

NodeId assign_leaf(const GmraModel& model, const Vector& x) { return model.node_at(assign_leaf_index(model, x)).id; }

OosExpansion expand_oos(const GmraModel& model, const Vector& x) {
  OosExpansion out;
  out.leaf = assign_leaf_index(model, x);
  out.in_model = fgwt(model, x, out.leaf);
  const GmraNode& L = model.node_at(out.leaf);
  Vector e = (x - L.center) - L.phi * (L.phi.transpose() * (x - L.center));
  const std::size_t depth = out.in_model.path.size();
  out.normal.resize(depth);
  out.residuals.push_back(e.norm());
  for (std::size_t t = depth; t-- > 1;) {
    const Matrix& psi = model.node(out.in_model.path[t]).psi;
    out.normal[t] = psi.transpose() * e;
    e -= psi * out.normal[t];
    out.residuals.push_back(e.norm());
  }
  const Matrix& phi0 = model.node(out.in_model.path[0]).phi;
  out.normal[0] = phi0.transpose() * e;
  e -= phi0 * out.normal[0];
  out.residuals.push_back(e.norm());
  out.residual_norm = e.norm();
  return out;
}

std::vector<OosExpansion> expand_oos_all(const GmraModel& model, const PointCloud& queries) {
  if (queries.dim() != model.ambient_dim()) throw GmraError(ErrorCode::DimMismatch, "queries have the wrong dimension");
  std::vector<OosExpansion> out(static_cast<std::size_t>(queries.n()));
  parallel_for(0, out.size(), [&](std::size_t i) { out[i] = expand_oos(model, queries.point(static_cast<Index>(i))); });
  return out;
}

Vector reconstruct_oos(const GmraModel& model, const OosExpansion& e) {
  Vector x = igwt(model, e.in_model);
  for (std::size_t t = 1; t < e.normal.size(); ++t) x += model.node(e.in_model.path[t]).psi * e.normal[t];
  x += model.node(e.in_model.path[0]).phi * e.normal[0];
  return x;
}

std::string oos_blocks_csv(const std::vector<OosExpansion>& ex) {
  std::ostringstream o;
  o << "point_id,part,j,k,block_index,value\n";
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const auto& path = ex[i].in_model.path;
    for (int part = 0; part < 2; ++part) {
      const std::vector<Vector>& blocks = part == 0 ? ex[i].in_model.blocks : ex[i].normal;
      for (std::size_t t = 0; t < blocks.size(); ++t)
        for (Index e = 0; e < blocks[t].size(); ++e)
          o << i << ',' << (part == 0 ? "model" : "normal") << ',' << path[t].j << ',' << path[t].k << ',' << e << ','
            << format_double(blocks[t](e)) << '\n';
    }
  }
  return o.str();
}

std::string oos_residuals_csv(const std::vector<OosExpansion>& ex) {
  std::ostringstream o;
  o << "point_id,leaf_j,leaf_k,model_residual,final_residual\n";
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const NodeId& l = ex[i].in_model.path.back();
    o << i << ',' << l.j << ',' << l.k << ',' << format_double(ex[i].residuals.front()) << ','
      << format_double(ex[i].residual_norm) << '\n';
  }
  return o.str();
}

}  // namespace gmra
