#include "cli.hpp"

#include "gmra/compare.hpp"
#include "gmra/genmodel.hpp"
#include "gmra/io_util.hpp"
#include "gmra/model_io.hpp"
#include "gmra/oos.hpp"
#include "gmra/parallel.hpp"
#include "gmra/pruning.hpp"
#include "gmra/synth.hpp"
#include "gmra/transforms.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#ifndef GMRA_VERSION
#define GMRA_VERSION "0.0.0"
#endif

namespace gmra::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- option groups -------------------------------------------------------

struct Common {
  std::string output;
  int threads = 0;
};

struct TreeArgs {
  std::string method = "pca";
  int splits_per_scale = 1;
  int min_cell_size = 0;
  int max_scale = 30;
  double homogeneity = -1.0;  // < 0: derived from --precision
  int working_dim = 2;
  int pca_component = 1;
  int kmeans_iterations = 100;
  std::uint64_t seed = 0;
};

struct ModelArgs {
  std::string policy = "fixed:2";
  double precision = 0.0;
  bool no_tangential = false;
  bool split_shared = false;
  bool strict_dimension = false;
  std::string variant = "gmra";
};

void add_common(CLI::App* s, Common& c) {
  s->add_option("-o,--output", c.output, "Output directory")->required();
  s->add_option("--threads", c.threads, "Worker threads (0: GMRA_THREADS or hardware)")->check(CLI::NonNegativeNumber);
}

void add_tree(CLI::App* s, TreeArgs& t) {
  s->add_option("--tree-method", t.method, "Partition method")->check(CLI::IsMember({"pca", "kmeans"}));
  s->add_option("--splits-per-scale", t.splits_per_scale, "Binary sub-splits per scale")->check(CLI::Range(1, 8));
  s->add_option("--min-cell-size", t.min_cell_size, "Leaf size threshold (0: automatic)")->check(CLI::NonNegativeNumber);
  s->add_option("--max-scale", t.max_scale, "Finest scale allowed")->check(CLI::Range(0, 60));
  s->add_option("--homogeneity", t.homogeneity,
                "Leaf when the covariance tail beyond --working-dim is below this (default: precision^2)");
  s->add_option("--working-dim", t.working_dim, "Dimension used by the homogeneity test")->check(CLI::PositiveNumber);
  s->add_option("--pca-component", t.pca_component, "Principal direction used to split")->check(CLI::PositiveNumber);
  s->add_option("--kmeans-iterations", t.kmeans_iterations, "Lloyd iterations per split")->check(CLI::PositiveNumber);
  s->add_option("--seed", t.seed, "Seed for the partition");
}

void add_model(CLI::App* s, ModelArgs& m) {
  s->add_option("--policy", m.policy, "Dimension policy, e.g. fixed:2, relative:0.5;leaf=relative:0.05");
  s->add_option("--precision", m.precision, "Target absolute precision (0: none)")->check(CLI::NonNegativeNumber);
  s->add_flag("--no-tangential", m.no_tangential, "Drop the tangential corrections");
  s->add_flag("--split-shared", m.split_shared, "Split sibling wavelet spaces into shared and specific parts");
  s->add_flag("--strict-dimension", m.strict_dimension, "Fail when a fixed dimension exceeds a cell size");
  s->add_option("--variant", m.variant, "Model variant")->check(CLI::IsMember({"gmra", "orthogonal", "pruned"}));
}

// ---- helpers -------------------------------------------------------------

PointCloud read_cloud(const std::string& path) {
  PointCloud c = load_cloud(path);
  if (c.n() == 0) throw GmraError(ErrorCode::EmptyInput, "'" + path + "' holds no points");
  if (!c.coords.allFinite()) throw GmraError(ErrorCode::ParseError, "'" + path + "' contains non-finite values");
  return c;
}

void require_finite(const PointMatrix& m, const std::string& what) {
  if (!m.allFinite()) throw NumericalFailure(what + " contains non-finite values");
}

std::string out_path(const Common& c, const std::string& name) { return (fs::path(c.output) / name).string(); }

// "a,b,c" or "log:lo:hi:n".
std::vector<double> parse_grid(const std::string& text, const std::string& flag) {
  auto fail = [&]() -> std::vector<double> {
    throw GmraError(ErrorCode::ConfigError, flag + ": cannot parse '" + text + "' (use a,b,c or log:lo:hi:n)");
  };
  std::vector<std::string> parts;
  std::string cur;
  char sep = text.rfind("log:", 0) == 0 ? ':' : ',';
  std::stringstream ss(sep == ':' ? text.substr(4) : text);
  while (std::getline(ss, cur, sep)) parts.push_back(cur);
  std::vector<double> v;
  try {
    for (const std::string& p : parts) {
      std::size_t used = 0;
      v.push_back(std::stod(p, &used));
      if (used != p.size()) return fail();
    }
  } catch (const std::exception&) {
    return fail();
  }
  if (v.empty()) return fail();
  if (sep == ':') {
    if (v.size() != 3 || v[2] != std::floor(v[2])) return fail();
    return log_grid(v[0], v[1], static_cast<int>(v[2]));
  }
  return v;
}

PartitionTree make_tree(const PointCloud& cloud, const TreeArgs& t, double precision) {
  StoppingRule stop;
  stop.min_cell_size = t.min_cell_size;
  stop.max_scale = t.max_scale;
  stop.working_dim = t.working_dim;
  stop.homogeneity = t.homogeneity >= 0 ? t.homogeneity : precision * precision;
  SplitOptions split;
  split.splits_per_scale = t.splits_per_scale;
  split.pca_component = t.pca_component;
  split.kmeans_iterations = t.kmeans_iterations;
  return build_tree(cloud, split_method_from_string(t.method), stop, t.seed, split);
}

GmraOptions make_options(const ModelArgs& m) {
  GmraOptions o;
  o.tangential_corrections = !m.no_tangential;
  o.split_shared_wavelets = m.split_shared;
  o.strict_dimension = m.strict_dimension;
  return o;
}

json config_value(const CLI::Option* o) {
  if (o->get_expected_min() == 0) return o->count() > 0;
  std::string v = o->count() > 0 ? o->results().back() : o->get_default_str();
  if (!v.empty()) {
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (end && *end == '\0' && std::isfinite(d)) {
      if (v.find_first_of(".eE") == std::string::npos && v.find_first_not_of("-0123456789") == std::string::npos) {
        try {
          if (v[0] == '-') return std::stoll(v);
          return std::stoull(v);
        } catch (const std::exception&) {
        }
      }
      return d;
    }
  }
  return v;
}

// Records every option of the subcommand so that `--config run_config.json` reproduces the run.
void write_run_config(const CLI::App* sub, const Common& c) {
  json j;
  j["command"] = sub->get_name();
  j["version"] = GMRA_VERSION;
  json opts;
  for (const CLI::Option* o : sub->get_options()) {
    std::string name = o->get_single_name();
    if (name == "help" || name == "config" || name == "threads" || name.empty()) continue;
    opts[name] = config_value(o);
  }
  for (auto it = opts.begin(); it != opts.end(); ++it) j[it.key()] = it.value();
  write_text_file(out_path(c, "run_config.json"), j.dump(2) + "\n");
}

// Expands --config FILE into flags placed before the explicit ones, which therefore win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::string cfg;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw GmraError(ErrorCode::ConfigError, "--config requires a file");
      cfg = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      cfg = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (cfg.empty()) return rest;
  json j;
  try {
    j = json::parse(read_text_file(cfg));
  } catch (const json::exception& e) {
    throw GmraError(ErrorCode::ConfigError, "config '" + cfg + "': " + e.what());
  }
  if (!j.is_object()) throw GmraError(ErrorCode::ConfigError, "config '" + cfg + "' must be a JSON object");
  std::vector<std::string> flags;
  std::string command;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (k == "command") {
      command = v.get<std::string>();
      continue;
    }
    if (k == "version") continue;
    if (v.is_boolean()) {
      if (v.get<bool>()) flags.push_back("--" + k);
    } else if (v.is_string()) {
      flags.push_back("--" + k + "=" + v.get<std::string>());
    } else if (v.is_number()) {
      flags.push_back("--" + k + "=" + v.dump());
    } else if (v.is_array()) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += v[i].is_string() ? v[i].get<std::string>() : v[i].dump();
      }
      flags.push_back("--" + k + "=" + s);
    } else {
      throw GmraError(ErrorCode::ConfigError, "config key '" + k + "' has an unsupported value");
    }
  }
  std::vector<std::string> out;
  std::size_t first = 0;
  if (!rest.empty() && rest[0].rfind("-", 0) != 0) {
    out.push_back(rest[0]);
    first = 1;
  } else if (!command.empty()) {
    out.push_back(command);
  }
  out.insert(out.end(), flags.begin(), flags.end());
  out.insert(out.end(), rest.begin() + static_cast<std::ptrdiff_t>(first), rest.end());
  return out;
}

std::string csv_row(std::initializer_list<std::string> cells) {
  std::string s;
  bool first = true;
  for (const std::string& c : cells) {
    if (!first) s += ',';
    s += c;
    first = false;
  }
  return s + '\n';
}

std::string fd(double v) { return format_double(v); }

// Per-scale table: stats, mean coefficient magnitude, empirical and spectral errors.
std::string scale_table(const GmraModel& m, const PointCloud& cloud) {
  std::vector<GwtCoefficients> coeffs = fgwt_all(m, cloud);
  std::vector<double> mag = mean_coefficient_magnitude(coeffs, m.max_scale());
  std::ostringstream o;
  o << "j,cells,mean_dim,mean_wavelet_dim,max_wavelet_dim,max_translation,mean_coefficient_magnitude,"
       "abs_error,rel_error,spectral_error\n";
  for (const ScaleStats& s : scale_stats(m)) {
    o << csv_row({std::to_string(s.j), std::to_string(s.cells), fd(s.mean_dim), fd(s.mean_wavelet_dim),
                  std::to_string(s.max_wavelet_dim), fd(s.max_translation),
                  fd(mag[static_cast<std::size_t>(s.j)]),
                  fd(approximation_error(m, cloud, s.j, ErrorNorm::L2Absolute)),
                  fd(approximation_error(m, cloud, s.j, ErrorNorm::L2Relative)), fd(spectral_error(m, s.j))});
  }
  return o.str();
}

// ---- subcommands ---------------------------------------------------------

struct GenArgs {
  Common c;
  std::string generator = "swissroll";
  Index n = 1000;
  Index dim = 50;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::int64_t embedding_seed = -1;
  int sphere_dim = 2;
  double radius = 1.0;
  int band_width = 4;
  int max_frequency = 24;
  double alpha = 1.0;
  std::string format = "csv";
};

void cmd_gen(const GenArgs& a, const CLI::App* sub, std::ostream& out) {
  GeneratorSpec s;
  s.kind = generator_from_string(a.generator);
  s.n = a.n;
  s.D = a.dim;
  s.noise = a.noise;
  s.seed = a.seed;
  if (a.embedding_seed >= 0) s.embedding_seed = static_cast<std::uint64_t>(a.embedding_seed);
  s.sphere_dim = a.sphere_dim;
  s.radius = a.radius;
  s.band_width = a.band_width;
  s.max_frequency = a.max_frequency;
  s.alpha = a.alpha;
  s.validate();
  GeneratedData d = generate_full(s);
  fs::create_directories(a.c.output);
  std::string ext = a.format == "csv" ? "csv" : "bin";
  save_cloud(d.cloud, out_path(a.c, "points." + ext));
  save_cloud(PointCloud(d.params), out_path(a.c, "params.csv"));
  write_run_config(sub, a.c);
  out << "wrote " << d.cloud.n() << " points in R^" << d.cloud.dim() << " to " << out_path(a.c, "points." + ext)
      << "\n";
}

struct BuildArgs {
  Common c;
  std::string input;
  TreeArgs tree;
  ModelArgs model;
};

void cmd_build(const BuildArgs& a, const CLI::App* sub, std::ostream& out) {
  DimensionPolicy policy = parse_policy(a.model.policy);
  PointCloud cloud = read_cloud(a.input);
  PartitionTree tree = make_tree(cloud, a.tree, a.model.precision);
  fs::create_directories(a.c.output);
  write_text_file(out_path(a.c, "tree.json"), tree_to_json(tree));
  json summary;
  summary["variant"] = a.model.variant;
  summary["n"] = cloud.n();
  summary["ambient_dim"] = cloud.dim();
  summary["tree_nodes"] = tree.nodes.size();
  summary["tree_max_scale"] = tree.max_scale;

  if (a.model.variant == "gmra") {
    GmraModel m = construct_gmra(cloud, std::move(tree), policy, a.model.precision, make_options(a.model));
    save_model(m, out_path(a.c, "model.bin"));
    std::string table = scale_table(m, cloud);
    write_text_file(out_path(a.c, "scale_stats.csv"), table);
    std::ostringstream hex;
    hex << std::hex << m.model_id;
    summary["model_id"] = hex.str();
    if (a.model.precision > 0) {
      // Smallest scale whose empirical absolute error meets the precision.
      int chosen = -1;
      for (int j = 0; j <= m.max_scale(); ++j)
        if (approximation_error(m, cloud, j, ErrorNorm::L2Absolute) <= a.model.precision) {
          chosen = j;
          break;
        }
      summary["precision"] = a.model.precision;
      summary["finest_scale_for_precision"] = chosen >= 0 ? json(chosen) : json(nullptr);
    }
    summary["error_at_finest_scale"] = approximation_error(m, cloud, m.max_scale(), ErrorNorm::L2Absolute);
  } else if (a.model.variant == "orthogonal") {
    OrthoGmraModel m = construct_ortho(cloud, tree, policy, a.model.precision);
    save_model(m, out_path(a.c, "model.bin"));
    std::vector<double> freq = dominant_frequency_by_scale(m);
    std::ostringstream o;
    o << "j,cells,mean_new_dim,max_cumulative_dim,dominant_frequency\n";
    for (int j = 0; j <= m.max_scale(); ++j) {
      Index cells = 0, dims = 0;
      int cum = 0;
      for (const OrthoNode& nd : m.nodes)
        if (nd.id.j == j) {
          ++cells;
          dims += nd.dim();
          cum = std::max(cum, nd.cum_dim);
        }
      if (cells == 0) continue;
      o << csv_row({std::to_string(j), std::to_string(cells),
                    fd(static_cast<double>(dims) / static_cast<double>(cells)), std::to_string(cum),
                    fd(freq[static_cast<std::size_t>(j)])});
    }
    write_text_file(out_path(a.c, "scale_stats.csv"), o.str());
    summary["max_path_cross_gram"] = max_path_cross_gram(m);
    summary["model_nodes"] = m.nodes.size();
  } else {
    if (!(a.model.precision > 0))
      throw GmraError(ErrorCode::ConfigError, "--variant pruned needs --precision > 0");
    PrunedForest f = prune(cloud, tree, a.model.precision);
    std::ostringstream o;
    o << "j,k,strategy,n_points,n_coded,basis_dim,coefficient_cost,dictionary_cost,total_cost,root\n";
    for (const ForestNode& nd : f.nodes)
      o << csv_row({std::to_string(nd.id.j), std::to_string(nd.id.k), to_string(nd.strategy),
                    std::to_string(nd.n_points), std::to_string(nd.n_coded), std::to_string(nd.basis.cols()),
                    std::to_string(nd.cost.coefficient_cost), std::to_string(nd.cost.dictionary_cost),
                    std::to_string(nd.cost.total), nd.parent < 0 ? "1" : "0"});
    write_text_file(out_path(a.c, "forest.csv"), o.str());
    PointMatrix rec = forest_reconstruct(f, cloud);
    require_finite(rec, "pruned reconstruction");
    EncodingCost tot = f.total_cost(), plain = plain_gmra_cost(cloud, tree, a.model.precision);
    auto h = f.strategy_histogram();
    summary["precision"] = a.model.precision;
    summary["coefficient_cost"] = tot.coefficient_cost;
    summary["dictionary_cost"] = tot.dictionary_cost;
    summary["total_cost"] = tot.total;
    summary["plain_gmra_total_cost"] = plain.total;
    summary["roots"] = f.roots.size();
    summary["strategies"] = {{"leaf", h[0]}, {"parent_only", h[1]}, {"children_only", h[2]}, {"wavelet", h[3]}};
    summary["rms_error"] = rms_error(cloud, rec);
  }
  write_text_file(out_path(a.c, "build_summary.json"), summary.dump(2) + "\n");
  write_run_config(sub, a.c);
  out << "built " << a.model.variant << " model in " << a.c.output << "\n";
}

struct TransformArgs {
  Common c;
  std::string model;
  std::string input;
  bool training = false;
  bool csv = false;
};

std::vector<GwtCoefficients> transform_batch(const GmraModel& m, const PointCloud& cloud, bool training) {
  if (cloud.dim() != m.ambient_dim())
    throw GmraError(ErrorCode::ModelMismatch, "points live in R^" + std::to_string(cloud.dim()) +
                                                  " but the model in R^" + std::to_string(m.ambient_dim()));
  if (training) return fgwt_all(m, cloud);
  std::vector<GwtCoefficients> out(static_cast<std::size_t>(cloud.n()));
  parallel_for(0, out.size(), [&](std::size_t i) { out[i] = fgwt(m, cloud.point(static_cast<Index>(i))); });
  return out;
}

void cmd_transform(const TransformArgs& a, const CLI::App* sub, std::ostream& out) {
  GmraModel m = load_model(a.model);
  PointCloud cloud = read_cloud(a.input);
  std::vector<GwtCoefficients> coeffs = transform_batch(m, cloud, a.training);
  fs::create_directories(a.c.output);
  save_coefficients(coeffs, out_path(a.c, "coefficients.bin"));
  if (a.csv) write_text_file(out_path(a.c, "coefficients.csv"), coefficients_to_csv(coeffs));
  // Error of the scale-j reconstruction against the input points.
  std::vector<double> mag = mean_coefficient_magnitude(coeffs, m.max_scale());
  std::ostringstream o;
  o << "j,abs_error,rel_error,mean_coefficient_magnitude\n";
  for (int j = 0; j <= m.max_scale(); ++j) {
    std::vector<double> e(coeffs.size()), r(coeffs.size());
    parallel_for(0, coeffs.size(), [&](std::size_t i) {
      Vector x = cloud.point(static_cast<Index>(i));
      double err = (igwt_to_scale(m, coeffs[i], j) - x).norm(), nx = x.norm();
      e[i] = err * err;
      r[i] = nx > 0 ? (err / nx) * (err / nx) : (err == 0 ? 0.0 : INFINITY);
    });
    double se = 0, sr = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      se += e[i];
      sr += r[i];
    }
    double n = static_cast<double>(coeffs.size());
    o << csv_row({std::to_string(j), fd(std::sqrt(se / n)), fd(std::sqrt(sr / n)), fd(mag[static_cast<std::size_t>(j)])});
  }
  write_text_file(out_path(a.c, "errors.csv"), o.str());
  write_run_config(sub, a.c);
  out << "transformed " << coeffs.size() << " points\n";
}

struct ReconstructArgs {
  Common c;
  std::string model;
  std::string coefficients;
  int scale = -1;
  std::string reference;
  std::string format = "csv";
};

void cmd_reconstruct(const ReconstructArgs& a, const CLI::App* sub, std::ostream& out) {
  GmraModel m = load_model(a.model);
  std::vector<GwtCoefficients> coeffs = load_coefficients(a.coefficients);
  for (const GwtCoefficients& c : coeffs)
    if (c.model_id != m.model_id) throw GmraError(ErrorCode::ModelMismatch, "coefficients were produced by another model");
  int j = a.scale < 0 ? m.max_scale() : a.scale;
  PointMatrix rec(static_cast<Index>(coeffs.size()), m.ambient_dim());
  parallel_for(0, coeffs.size(), [&](std::size_t i) {
    rec.row(static_cast<Index>(i)) = igwt_to_scale(m, coeffs[i], j).transpose();
  });
  require_finite(rec, "reconstruction");
  fs::create_directories(a.c.output);
  save_cloud(PointCloud(rec), out_path(a.c, std::string("reconstruction.") + (a.format == "csv" ? "csv" : "bin")));
  if (!a.reference.empty()) {
    PointCloud ref = read_cloud(a.reference);
    if (ref.n() != rec.rows() || ref.dim() != rec.cols())
      throw GmraError(ErrorCode::DimMismatch, "reference points do not match the coefficients");
    std::ostringstream o;
    o << "point_id,error,relative_error\n";
    for (Index i = 0; i < rec.rows(); ++i) {
      double e = (rec.row(i) - ref.coords.row(i)).norm(), nx = ref.coords.row(i).norm();
      o << csv_row({std::to_string(i), fd(e), fd(nx > 0 ? e / nx : (e == 0 ? 0.0 : INFINITY))});
    }
    write_text_file(out_path(a.c, "reconstruction_errors.csv"), o.str());
    json s;
    s["scale"] = j;
    s["rms_error"] = rms_error(ref, rec);
    s["relative_error"] = relative_rms_error(ref, rec);
    write_text_file(out_path(a.c, "reconstruction_summary.json"), s.dump(2) + "\n");
  }
  write_run_config(sub, a.c);
  out << "reconstructed " << rec.rows() << " points at scale " << j << "\n";
}

struct CompressArgs {
  Common c;
  std::string model;
  std::string input;
  std::string deltas = "log:1e-5:1:11";
  std::string mode = "entrywise";
  bool training = false;
};

void cmd_compress(const CompressArgs& a, const CLI::App* sub, std::ostream& out) {
  std::vector<double> deltas = parse_grid(a.deltas, "--deltas");
  for (double d : deltas)
    if (!(d >= 0)) throw GmraError(ErrorCode::ConfigError, "--deltas must be nonnegative");
  PointCloud cloud = read_cloud(a.input);
  fs::create_directories(a.c.output);
  std::ostringstream sweep;
  sweep << "delta,kept,total,ratio,rms_error,max_error\n";
  auto row = [&](const ThresholdReport& r) {
    if (!std::isfinite(r.rms_error)) throw NumericalFailure("threshold sweep produced a non-finite error");
    sweep << csv_row({fd(r.delta), std::to_string(r.kept), std::to_string(r.total), fd(r.ratio), fd(r.rms_error),
                      fd(r.max_error)});
  };
  if (peek_model_variant(a.model) == ModelVariant::Orthogonal) {
    OrthoGmraModel m = load_ortho_model(a.model);
    if (cloud.dim() != m.ambient_dim()) throw GmraError(ErrorCode::ModelMismatch, "points do not match the model");
    std::vector<OrthoCoefficients> coeffs(static_cast<std::size_t>(cloud.n()));
    parallel_for(0, coeffs.size(), [&](std::size_t i) { coeffs[i] = ortho_fgwt(m, cloud.point(static_cast<Index>(i))); });
    for (double d : deltas) row(ortho_threshold(m, coeffs, d, cloud.coords));
  } else {
    GmraModel m = load_model(a.model);
    std::vector<GwtCoefficients> coeffs = transform_batch(m, cloud, a.training);
    ThresholdMode mode = a.mode == "block" ? ThresholdMode::Block : ThresholdMode::Entrywise;
    for (double d : deltas) {
      std::vector<GwtCoefficients> kept;
      ThresholdReport r = threshold_coefficients(m, coeffs, d, cloud.coords, &kept, mode);
      row(r);
      if (deltas.size() == 1) {
        std::ostringstream mask;
        mask << "point_id,j,k,block_index,value,kept\n";
        for (std::size_t i = 0; i < kept.size(); ++i)
          for (std::size_t t = 0; t < kept[i].blocks.size(); ++t)
            for (Index e = 0; e < kept[i].blocks[t].size(); ++e)
              mask << csv_row({std::to_string(i), std::to_string(kept[i].path[t].j), std::to_string(kept[i].path[t].k),
                               std::to_string(e), fd(coeffs[i].blocks[t](e)),
                               t == 0 || kept[i].blocks[t](e) != 0.0 ? "1" : "0"});
        write_text_file(out_path(a.c, "kept_mask.csv"), mask.str());
        PointMatrix rec = igwt_all(m, kept);
        require_finite(rec, "thresholded reconstruction");
        save_cloud(PointCloud(rec), out_path(a.c, "reconstruction.csv"));
      }
    }
  }
  write_text_file(out_path(a.c, "threshold_sweep.csv"), sweep.str());
  write_run_config(sub, a.c);
  out << "thresholded at " << deltas.size() << " levels\n";
}

struct CompareArgs {
  Common c;
  std::string input;
  TreeArgs tree;
  std::string policy = "fixed:2";
  double ortho_precision = 1e-3;
  std::string deltas = "log:1e-4:1:13";
  std::string eps_grid = "log:1e-3:1:13";
  int svd_max_rank = -1;
};

void cmd_compare(const CompareArgs& a, const CLI::App* sub, std::ostream& out) {
  CompareOptions opt;
  opt.policy = parse_policy(a.policy);
  opt.ortho_precision = a.ortho_precision;
  opt.deltas = parse_grid(a.deltas, "--deltas");
  opt.eps_grid = parse_grid(a.eps_grid, "--eps-grid");
  for (double e : opt.eps_grid)
    if (!(e > 0)) throw GmraError(ErrorCode::ConfigError, "--eps-grid values must be positive");
  opt.svd_max_rank = a.svd_max_rank;
  PointCloud cloud = read_cloud(a.input);
  PartitionTree tree = make_tree(cloud, a.tree, 0.0);
  std::vector<MethodCurve> curves = compare_encoders(cloud, tree, opt);
  fs::create_directories(a.c.output);
  write_text_file(out_path(a.c, "compare.csv"), compare_csv(curves));
  std::ostringstream o;
  o << "eps,pruned_coefficient_cost,pruned_total_cost,plain_coefficient_cost,plain_total_cost\n";
  for (const CostPoint& p : curves[2].points) {
    EncodingCost plain = plain_gmra_cost(cloud, tree, p.parameter);
    o << csv_row({fd(p.parameter), std::to_string(p.cost.coefficient_cost), std::to_string(p.cost.total),
                  std::to_string(plain.coefficient_cost), std::to_string(plain.total)});
  }
  write_text_file(out_path(a.c, "pruned_vs_plain.csv"), o.str());
  write_run_config(sub, a.c);
  out << "compared " << curves.size() << " encoders\n";
}

struct OosArgs {
  Common c;
  std::string model;
  std::string input;
};

void cmd_oos(const OosArgs& a, const CLI::App* sub, std::ostream& out) {
  GmraModel m = load_model(a.model);
  PointCloud q = read_cloud(a.input);
  if (q.dim() != m.ambient_dim()) throw GmraError(ErrorCode::ModelMismatch, "queries do not match the model");
  std::vector<OosExpansion> ex = expand_oos_all(m, q);
  fs::create_directories(a.c.output);
  write_text_file(out_path(a.c, "oos_blocks.csv"), oos_blocks_csv(ex));
  write_text_file(out_path(a.c, "oos_residuals.csv"), oos_residuals_csv(ex));
  PointMatrix rec(q.n(), q.dim());
  for (Index i = 0; i < q.n(); ++i) rec.row(i) = reconstruct_oos(m, ex[static_cast<std::size_t>(i)]).transpose();
  require_finite(rec, "out-of-sample reconstruction");
  save_cloud(PointCloud(rec), out_path(a.c, "oos_reconstruction.csv"));
  write_run_config(sub, a.c);
  out << "expanded " << q.n() << " queries\n";
}

struct SampleArgs {
  Common c;
  std::string model;
  std::string training;
  int scale = -1;
  Index count = 1000;
  std::uint64_t seed = 0;
  bool full_covariance = false;
  std::string format = "csv";
};

void cmd_sample(const SampleArgs& a, const CLI::App* sub, std::ostream& out) {
  GmraModel m = load_model(a.model);
  PointCloud train = read_cloud(a.training);
  if (train.n() != m.tree.n_points || train.dim() != m.ambient_dim())
    throw GmraError(ErrorCode::ModelMismatch, "--training is not the cloud this model was built on");
  int j = a.scale < 0 ? m.max_scale() : a.scale;
  ScaleModel sm = fit_scale_model(m, train, j, a.full_covariance);
  GeneratedSample g = sample_with_cells(sm, a.count, a.seed);
  require_finite(g.cloud.coords, "generated samples");
  fs::create_directories(a.c.output);
  save_cloud(g.cloud, out_path(a.c, std::string("samples.") + (a.format == "csv" ? "csv" : "bin")));
  std::ostringstream cells;
  cells << "point_id,cell_j,cell_k\n";
  for (std::size_t i = 0; i < g.cell.size(); ++i) {
    const NodeId& id = sm.cells[static_cast<std::size_t>(g.cell[i])].id;
    cells << csv_row({std::to_string(i), std::to_string(id.j), std::to_string(id.k)});
  }
  write_text_file(out_path(a.c, "sample_cells.csv"), cells.str());
  json s;
  s["scale"] = j;
  s["full_covariance"] = a.full_covariance;
  json w = json::array();
  for (std::size_t k = 0; k < sm.cells.size(); ++k)
    w.push_back({{"j", sm.cells[k].id.j}, {"k", sm.cells[k].id.k}, {"weight", sm.weights[k]},
                 {"dim", sm.cells[k].axes.cols()}});
  s["cells"] = std::move(w);
  write_text_file(out_path(a.c, "scale_model.json"), s.dump(2) + "\n");
  write_run_config(sub, a.c);
  out << "sampled " << a.count << " points at scale " << j << "\n";
}

struct EvaluateArgs {
  Common c;
  std::string a;
  std::string b;
  bool per_point = false;
};

void cmd_evaluate(const EvaluateArgs& a, const CLI::App* sub, std::ostream& out) {
  PointCloud A = read_cloud(a.a), B = read_cloud(a.b);
  if (A.dim() != B.dim()) throw GmraError(ErrorCode::DimMismatch, "the two clouds differ in dimension");
  std::vector<double> ab = nearest_distances(A.coords, B.coords), ba = nearest_distances(B.coords, A.coords);
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  fs::create_directories(a.c.output);
  std::ostringstream o;
  o << "measure,value\n";
  o << csv_row({"hausdorff_max", fd(hausdorff(A, B, HausdorffMode::Max))});
  o << csv_row({"hausdorff_median", fd(hausdorff(A, B, HausdorffMode::Median))});
  o << csv_row({"mean_nearest_a_to_b", fd(mean(ab))});
  o << csv_row({"mean_nearest_b_to_a", fd(mean(ba))});
  write_text_file(out_path(a.c, "distances.csv"), o.str());
  if (a.per_point) {
    std::ostringstream p;
    p << "set,point_id,nearest_distance\n";
    for (std::size_t i = 0; i < ab.size(); ++i) p << csv_row({"a", std::to_string(i), fd(ab[i])});
    for (std::size_t i = 0; i < ba.size(); ++i) p << csv_row({"b", std::to_string(i), fd(ba[i])});
    write_text_file(out_path(a.c, "nearest.csv"), p.str());
  }
  write_run_config(sub, a.c);
  out << "evaluated " << A.n() << " x " << B.n() << " points\n";
}

int code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::ConfigError:
    case ErrorCode::SpecError:
    case ErrorCode::DimensionExceedsCell:
      return kConfigError;
    case ErrorCode::CostModelViolation:
      return kNumericalError;
    default:
      return kDataError;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geometric multi-resolution analysis of point clouds", "gmra"};
  app.set_version_flag("--version", GMRA_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.footer("Options may also come from --config FILE.json (keys are long option names); explicit flags win.\n"
             "GMRA_THREADS sets the default thread count.");

  GenArgs gen;
  auto* s_gen = app.add_subcommand("gen", "Generate a synthetic point cloud");
  add_common(s_gen, gen.c);
  s_gen->add_option("--generator", gen.generator, "swissroll, smanifold, wave, sphere or bandlimited");
  s_gen->add_option("-n,--n", gen.n, "Number of points")->check(CLI::PositiveNumber);
  s_gen->add_option("--dim", gen.dim, "Ambient dimension")->check(CLI::PositiveNumber);
  s_gen->add_option("--noise", gen.noise, "Noise level sigma")->check(CLI::NonNegativeNumber);
  s_gen->add_option("--seed", gen.seed, "Sample seed");
  s_gen->add_option("--embedding-seed", gen.embedding_seed, "Seed of the random isometry (-1: same as --seed)");
  s_gen->add_option("--sphere-dim", gen.sphere_dim, "Sphere dimension")->check(CLI::PositiveNumber);
  s_gen->add_option("--radius", gen.radius, "Sphere radius")->check(CLI::PositiveNumber);
  s_gen->add_option("--band-width", gen.band_width, "Band-limited: frequencies per band")->check(CLI::PositiveNumber);
  s_gen->add_option("--max-frequency", gen.max_frequency, "Band-limited: highest frequency")->check(CLI::NonNegativeNumber);
  s_gen->add_option("--alpha", gen.alpha, "Band-limited: decay exponent");
  s_gen->add_option("--format", gen.format, "Output format")->check(CLI::IsMember({"csv", "bin"}));

  BuildArgs build;
  auto* s_build = app.add_subcommand("build", "Build a tree and a GMRA model");
  add_common(s_build, build.c);
  s_build->add_option("-i,--input", build.input, "Point cloud (.csv or .bin)")->required();
  add_tree(s_build, build.tree);
  add_model(s_build, build.model);

  TransformArgs tr;
  auto* s_tr = app.add_subcommand("transform", "Forward transform of a point batch");
  add_common(s_tr, tr.c);
  s_tr->add_option("-m,--model", tr.model, "Model file")->required();
  s_tr->add_option("-i,--input", tr.input, "Points to transform")->required();
  s_tr->add_flag("--training", tr.training, "Input is the training cloud; use its stored leaves");
  s_tr->add_flag("--csv", tr.csv, "Also write coefficients.csv");

  ReconstructArgs rc;
  auto* s_rc = app.add_subcommand("reconstruct", "Inverse transform of stored coefficients");
  add_common(s_rc, rc.c);
  s_rc->add_option("-m,--model", rc.model, "Model file")->required();
  s_rc->add_option("--coefficients", rc.coefficients, "coefficients.bin from transform")->required();
  s_rc->add_option("--scale", rc.scale, "Reconstruction scale (-1: finest)");
  s_rc->add_option("--reference", rc.reference, "Points to measure the error against");
  s_rc->add_option("--format", rc.format, "Output format")->check(CLI::IsMember({"csv", "bin"}));

  CompressArgs cp;
  auto* s_cp = app.add_subcommand("compress", "Threshold sweep of the coefficients");
  add_common(s_cp, cp.c);
  s_cp->add_option("-m,--model", cp.model, "Model file (plain or orthogonal)")->required();
  s_cp->add_option("-i,--input", cp.input, "Points to encode")->required();
  s_cp->add_option("--deltas", cp.deltas, "Thresholds: a,b,c or log:lo:hi:n; a single value also writes the mask");
  s_cp->add_option("--mode", cp.mode, "Entry or block thresholding")->check(CLI::IsMember({"entrywise", "block"}));
  s_cp->add_flag("--training", cp.training, "Input is the training cloud; use its stored leaves");

  CompareArgs cm;
  auto* s_cm = app.add_subcommand("compare", "Cost against error for GMRA variants and SVD");
  add_common(s_cm, cm.c);
  s_cm->add_option("-i,--input", cm.input, "Point cloud")->required();
  add_tree(s_cm, cm.tree);
  s_cm->add_option("--policy", cm.policy, "Dimension policy for the plain and orthogonal models");
  s_cm->add_option("--ortho-precision", cm.ortho_precision, "Precision of the orthogonal model")
      ->check(CLI::NonNegativeNumber);
  s_cm->add_option("--deltas", cm.deltas, "Thresholds: a,b,c or log:lo:hi:n");
  s_cm->add_option("--eps-grid", cm.eps_grid, "Pruning precisions: a,b,c or log:lo:hi:n");
  s_cm->add_option("--svd-max-rank", cm.svd_max_rank, "Largest SVD rank (-1: full)");

  OosArgs oo;
  auto* s_oo = app.add_subcommand("oos", "Out-of-sample expansion of query points");
  add_common(s_oo, oo.c);
  s_oo->add_option("-m,--model", oo.model, "Model file")->required();
  s_oo->add_option("-i,--input", oo.input, "Query points")->required();

  SampleArgs sa;
  auto* s_sa = app.add_subcommand("sample", "Draw points from the per-scale generative model");
  add_common(s_sa, sa.c);
  s_sa->add_option("-m,--model", sa.model, "Model file")->required();
  s_sa->add_option("--training", sa.training, "Cloud the model was built on")->required();
  s_sa->add_option("--scale", sa.scale, "Scale of the partition (-1: finest)");
  s_sa->add_option("--count", sa.count, "Number of samples")->check(CLI::PositiveNumber);
  s_sa->add_option("--seed", sa.seed, "Sampling seed");
  s_sa->add_flag("--full-covariance", sa.full_covariance, "Full local covariance instead of diagonal");
  s_sa->add_option("--format", sa.format, "Output format")->check(CLI::IsMember({"csv", "bin"}));

  EvaluateArgs ev;
  auto* s_ev = app.add_subcommand("evaluate", "Distances between two point clouds");
  add_common(s_ev, ev.c);
  s_ev->add_option("-a", ev.a, "First cloud")->required();
  s_ev->add_option("-b", ev.b, "Second cloud")->required();
  s_ev->add_flag("--per-point", ev.per_point, "Write nearest-neighbour distances per point");

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
    CLI::App* sub = app.get_subcommands().front();
    int threads = 0;
    for (const Common* c : {&gen.c, &build.c, &tr.c, &rc.c, &cp.c, &cm.c, &oo.c, &sa.c, &ev.c})
      if (c->threads > 0) threads = c->threads;
    set_thread_count(static_cast<std::size_t>(threads));
    const std::string& name = sub->get_name();
    if (name == "gen") cmd_gen(gen, sub, out);
    else if (name == "build") cmd_build(build, sub, out);
    else if (name == "transform") cmd_transform(tr, sub, out);
    else if (name == "reconstruct") cmd_reconstruct(rc, sub, out);
    else if (name == "compress") cmd_compress(cp, sub, out);
    else if (name == "compare") cmd_compare(cm, sub, out);
    else if (name == "oos") cmd_oos(oo, sub, out);
    else if (name == "sample") cmd_sample(sa, sub, out);
    else cmd_evaluate(ev, sub, out);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* h = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    out << h->help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << GMRA_VERSION << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return e.get_exit_code() == 0 ? kOk : kConfigError;
  } catch (const GmraError& e) {
    err << "error: " << e.what() << "\n";
    return code_for(e.code());
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  }
  return kOk;
}

}  // namespace gmra::cli
