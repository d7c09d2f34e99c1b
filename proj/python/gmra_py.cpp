#include "gmra/compare.hpp"
#include "gmra/genmodel.hpp"
#include "gmra/gmra.hpp"
#include "gmra/model_io.hpp"
#include "gmra/oos.hpp"
#include "gmra/ortho.hpp"
#include "gmra/parallel.hpp"
#include "gmra/pruning.hpp"
#include "gmra/synth.hpp"
#include "gmra/transforms.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace gmra;

namespace {

PointCloud cloud_of(const PointMatrix& x) { return PointCloud(x); }

py::list blocks_of(const GwtCoefficients& c) {
  py::list out;
  for (std::size_t t = 0; t < c.blocks.size(); ++t)
    out.append(py::make_tuple(c.path[t].j, c.path[t].k, c.blocks[t]));
  return out;
}

GwtCoefficients coeffs_of(const GmraModel& m, const py::list& blocks) {
  GwtCoefficients c;
  c.ambient_dim = m.ambient_dim();
  c.model_id = m.model_id;
  for (const py::handle& h : blocks) {
    auto t = h.cast<py::tuple>();
    c.path.push_back({t[0].cast<int>(), t[1].cast<int>()});
    c.blocks.push_back(t[2].cast<Vector>());
  }
  return c;
}

py::dict cost_dict(const CostPoint& p) {
  py::dict d;
  d["parameter"] = p.parameter;
  d["coefficient_cost"] = p.cost.coefficient_cost;
  d["dictionary_cost"] = p.cost.dictionary_cost;
  d["total_cost"] = p.cost.total;
  d["rms_error"] = p.rms_error;
  d["relative_error"] = p.relative_error;
  return d;
}

PartitionTree tree_for(const PointCloud& c, const std::string& method, std::uint64_t seed, int splits_per_scale,
                       int min_cell_size, int max_scale) {
  StoppingRule stop;
  stop.min_cell_size = min_cell_size;
  stop.max_scale = max_scale;
  SplitOptions split;
  split.splits_per_scale = splits_per_scale;
  return build_tree(c, split_method_from_string(method), stop, seed, split);
}

}  // namespace

PYBIND11_MODULE(_gmra, m) {
  m.doc() = "Geometric multi-resolution analysis of point clouds";

  static py::exception<GmraError> exc(m, "GmraError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const GmraError& e) {
      py::set_error(exc, e.what());
    }
  });

  m.def("set_threads", [](std::size_t n) { set_thread_count(n); }, py::arg("n"));

  m.def(
      "generate",
      [](const std::string& kind, Index n, Index dim, double noise, std::uint64_t seed,
         std::optional<std::uint64_t> embedding_seed) {
        GeneratorSpec s;
        s.kind = generator_from_string(kind);
        s.n = n;
        s.D = dim;
        s.noise = noise;
        s.seed = seed;
        s.embedding_seed = embedding_seed;
        s.validate();
        return generate(s).coords;
      },
      py::arg("kind"), py::arg("n"), py::arg("dim") = 50, py::arg("noise") = 0.0, py::arg("seed") = 0,
      py::arg("embedding_seed") = py::none());

  py::class_<GmraModel>(m, "Model")
      .def_static(
          "build",
          [](const PointMatrix& x, const std::string& policy, const std::string& method, std::uint64_t seed,
             int splits_per_scale, int min_cell_size, int max_scale, bool tangential, bool split_shared) {
            PointCloud c = cloud_of(x);
            GmraOptions o;
            o.tangential_corrections = tangential;
            o.split_shared_wavelets = split_shared;
            py::gil_scoped_release release;
            return construct_gmra(c, tree_for(c, method, seed, splits_per_scale, min_cell_size, max_scale),
                                  parse_policy(policy), 0.0, o);
          },
          py::arg("points"), py::arg("policy") = "fixed:2", py::arg("method") = "pca", py::arg("seed") = 0,
          py::arg("splits_per_scale") = 1, py::arg("min_cell_size") = 0, py::arg("max_scale") = 30,
          py::arg("tangential") = true, py::arg("split_shared") = false)
      .def_static("load", &load_model, py::arg("path"))
      .def("save", [](const GmraModel& mdl, const std::string& p) { save_model(mdl, p); }, py::arg("path"))
      .def_property_readonly("max_scale", &GmraModel::max_scale)
      .def_property_readonly("ambient_dim", &GmraModel::ambient_dim)
      .def_property_readonly("num_nodes", [](const GmraModel& mdl) { return mdl.nodes.size(); })
      .def_property_readonly("model_id", [](const GmraModel& mdl) { return mdl.model_id; })
      .def_property_readonly("policy", [](const GmraModel& mdl) { return format_policy(mdl.policy); })
      .def(
          "fgwt", [](const GmraModel& mdl, const Vector& x) { return blocks_of(fgwt(mdl, x)); }, py::arg("x"),
          "Blocks as (j, k, values), root first.")
      .def(
          "igwt", [](const GmraModel& mdl, const py::list& b) { return igwt(mdl, coeffs_of(mdl, b)); },
          py::arg("blocks"))
      .def(
          "reconstruct",
          [](const GmraModel& mdl, const PointMatrix& x, int scale) {
            PointMatrix out(x.rows(), x.cols());
            {
              py::gil_scoped_release release;
              int j = scale < 0 ? mdl.max_scale() : scale;
              parallel_for(0, static_cast<std::size_t>(x.rows()), [&](std::size_t i) {
                GwtCoefficients c = fgwt(mdl, x.row(static_cast<Index>(i)).transpose());
                out.row(static_cast<Index>(i)) = igwt_to_scale(mdl, c, j).transpose();
              });
            }
            return out;
          },
          py::arg("points"), py::arg("scale") = -1, "Transform then invert up to scale (-1: finest).")
      .def(
          "approximation_error",
          [](const GmraModel& mdl, const PointMatrix& x, int j, bool relative) {
            return approximation_error(mdl, cloud_of(x), j, relative ? ErrorNorm::L2Relative : ErrorNorm::L2Absolute);
          },
          py::arg("training_points"), py::arg("j"), py::arg("relative") = false)
      .def("spectral_error", [](const GmraModel& mdl, int j) { return spectral_error(mdl, j); }, py::arg("j"))
      .def("scale_stats",
           [](const GmraModel& mdl) {
             py::list out;
             for (const ScaleStats& s : scale_stats(mdl)) {
               py::dict d;
               d["j"] = s.j;
               d["cells"] = s.cells;
               d["mean_dim"] = s.mean_dim;
               d["mean_wavelet_dim"] = s.mean_wavelet_dim;
               d["max_wavelet_dim"] = s.max_wavelet_dim;
               out.append(d);
             }
             return out;
           })
      .def(
          "threshold_sweep",
          [](const GmraModel& mdl, const PointMatrix& x, const std::vector<double>& deltas) {
            py::list out;
            for (const CostPoint& p : gmra_threshold_curve(mdl, cloud_of(x), deltas)) out.append(cost_dict(p));
            return out;
          },
          py::arg("training_points"), py::arg("deltas"))
      .def(
          "oos",
          [](const GmraModel& mdl, const Vector& x) {
            OosExpansion e = expand_oos(mdl, x);
            py::dict d;
            d["reconstruction"] = reconstruct_oos(mdl, e);
            d["residuals"] = e.residuals;
            d["residual_norm"] = e.residual_norm;
            return d;
          },
          py::arg("x"))
      .def(
          "sample",
          [](const GmraModel& mdl, const PointMatrix& train, int j, Index count, std::uint64_t seed, bool full) {
            ScaleModel sm = fit_scale_model(mdl, cloud_of(train), j < 0 ? mdl.max_scale() : j, full);
            return sample(sm, count, seed).coords;
          },
          py::arg("training_points"), py::arg("j") = -1, py::arg("count") = 1000, py::arg("seed") = 0,
          py::arg("full_covariance") = false);

  m.def(
      "ortho_cross_gram",
      [](const PointMatrix& x, const std::string& policy, double eps) {
        PointCloud c = cloud_of(x);
        OrthoGmraModel o = construct_ortho(c, tree_for(c, "pca", 0, 1, 0, 30), parse_policy(policy), eps);
        return max_path_cross_gram(o);
      },
      py::arg("points"), py::arg("policy") = "fixed:2", py::arg("eps") = 1e-3,
      "Largest cross-Gram norm along root-to-leaf paths of an orthogonal model.");

  m.def(
      "prune",
      [](const PointMatrix& x, double eps, int splits_per_scale) {
        PointCloud c = cloud_of(x);
        PartitionTree t = tree_for(c, "pca", 0, splits_per_scale, 0, 30);
        PrunedForest f = prune(c, t, eps);
        EncodingCost plain = plain_gmra_cost(c, t, eps);
        py::dict d;
        d["coefficient_cost"] = f.total_cost().coefficient_cost;
        d["total_cost"] = f.total_cost().total;
        d["plain_total_cost"] = plain.total;
        d["roots"] = f.roots.size();
        d["rms_error"] = rms_error(c, forest_reconstruct(f, c));
        return d;
      },
      py::arg("points"), py::arg("eps"), py::arg("splits_per_scale") = 1);

  m.def(
      "svd_baseline",
      [](const PointMatrix& x, int max_rank) {
        py::list out;
        for (const CostPoint& p : svd_baseline(cloud_of(x), max_rank)) out.append(cost_dict(p));
        return out;
      },
      py::arg("points"), py::arg("max_rank") = -1);

  m.def(
      "hausdorff",
      [](const PointMatrix& a, const PointMatrix& b, const std::string& mode) {
        if (mode != "max" && mode != "median") throw GmraError(ErrorCode::ConfigError, "mode must be max or median");
        return hausdorff(cloud_of(a), cloud_of(b), mode == "max" ? HausdorffMode::Max : HausdorffMode::Median);
      },
      py::arg("a"), py::arg("b"), py::arg("mode") = "max");
}
