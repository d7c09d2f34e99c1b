#include "gmra/model_io.hpp"

#include "gmra/io_util.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <sstream>

namespace gmra {

namespace {

using json = nlohmann::ordered_json;

std::string format_rule(const DimensionRule& r) {
  std::string s = to_string(r.kind);
  s += ':';
  if (r.kind == PolicyKind::Fixed) return s + std::to_string(r.fixed_dim);
  if (r.schedule.empty()) return s + format_double(r.epsilon);
  for (std::size_t i = 0; i < r.schedule.size(); ++i) {
    if (i) s += '/';
    s += format_double(r.schedule[i]);
  }
  return s;
}

double parse_number(const std::string& t, const std::string& whole) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != t.size())
    throw GmraError(ErrorCode::ConfigError, "policy '" + whole + "': '" + t + "' is not a number");
  return v;
}

DimensionRule parse_rule(const std::string& t, const std::string& whole) {
  auto colon = t.find(':');
  if (colon == std::string::npos)
    throw GmraError(ErrorCode::ConfigError, "policy '" + whole + "': expected <kind>:<value>");
  std::string kind = t.substr(0, colon), val = t.substr(colon + 1);
  DimensionRule r;
  if (kind == "fixed") {
    r.kind = PolicyKind::Fixed;
    double d = parse_number(val, whole);
    if (d != static_cast<int>(d))
      throw GmraError(ErrorCode::ConfigError, "policy '" + whole + "': fixed dimension must be an integer");
    r.fixed_dim = static_cast<int>(d);
    return r;
  }
  if (kind == "relative")
    r.kind = PolicyKind::RelativeThreshold;
  else if (kind == "absolute")
    r.kind = PolicyKind::AbsoluteThreshold;
  else
    throw GmraError(ErrorCode::ConfigError, "policy '" + whole + "': unknown kind '" + kind + "'");
  if (val.find('/') == std::string::npos) {
    r.epsilon = parse_number(val, whole);
  } else {
    std::stringstream ss(val);
    std::string part;
    while (std::getline(ss, part, '/')) r.schedule.push_back(parse_number(part, whole));
    r.epsilon = r.schedule.back();
  }
  return r;
}

json matrix_shape(const Matrix& m) { return json::array({m.rows(), m.cols()}); }

void put(std::vector<double>& out, const double* p, Index n) { out.insert(out.end(), p, p + n); }

class Reader {
 public:
  Reader(const std::vector<double>& v) : v_(v) {}
  Vector vec(Index n) {
    check(n);
    Vector r = Eigen::Map<const Vector>(v_.data() + pos_, n);
    pos_ += static_cast<std::size_t>(n);
    return r;
  }
  Matrix mat(Index rows, Index cols) {
    check(rows * cols);
    Matrix r = Eigen::Map<const Matrix>(v_.data() + pos_, rows, cols);
    pos_ += static_cast<std::size_t>(rows * cols);
    return r;
  }
  bool done() const { return pos_ == v_.size(); }

 private:
  void check(Index n) const {
    if (n < 0 || pos_ + static_cast<std::size_t>(n) > v_.size())
      throw GmraError(ErrorCode::ParseError, "model payload is truncated");
  }
  const std::vector<double>& v_;
  std::size_t pos_ = 0;
};

void write_container(const std::string& path, ModelVariant variant, std::uint64_t id, const json& header,
                     const std::vector<double>& payload, const std::string& sidecar) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw GmraError(ErrorCode::IoError, "cannot write '" + path + "'");
  std::string h = header.dump();
  out.write(kModelMagic, 8);
  write_u64(out, kModelFormatVersion);
  write_u64(out, static_cast<std::uint64_t>(variant));
  write_u64(out, id);
  write_u64(out, h.size());
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  write_u64(out, payload.size());
  write_f64_array(out, payload.data(), payload.size());
  if (!out) throw GmraError(ErrorCode::IoError, "write to '" + path + "' failed");
  out.close();
  write_text_file(path + ".json", sidecar);
}

struct Container {
  ModelVariant variant;
  std::uint64_t id = 0;
  json header;
  std::vector<double> payload;
};

Container read_container(const std::string& path, bool header_only = false) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GmraError(ErrorCode::IoError, "cannot open '" + path + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kModelMagic, 8) != 0)
    throw GmraError(ErrorCode::ParseError, "'" + path + "' is not a GMRA model file");
  std::uint64_t version = read_u64(in);
  if (version != kModelFormatVersion)
    throw GmraError(ErrorCode::ParseError, "unsupported model format version " + std::to_string(version));
  Container c;
  std::uint64_t v = read_u64(in);
  if (v != 1 && v != 2) throw GmraError(ErrorCode::ParseError, "unknown model variant " + std::to_string(v));
  c.variant = static_cast<ModelVariant>(v);
  c.id = read_u64(in);
  if (header_only) return c;
  std::uint64_t hlen = read_u64(in);
  if (!in || hlen > (1ULL << 34)) throw GmraError(ErrorCode::ParseError, "bad model header length");
  std::string h(hlen, '\0');
  in.read(h.data(), static_cast<std::streamsize>(hlen));
  std::uint64_t count = read_u64(in);
  if (!in || count > (1ULL << 36)) throw GmraError(ErrorCode::ParseError, "model file is truncated");
  c.payload.resize(count);
  read_f64_array(in, c.payload.data(), count);
  if (!in) throw GmraError(ErrorCode::ParseError, "model payload is truncated");
  try {
    c.header = json::parse(h);
  } catch (const std::exception& e) {
    throw GmraError(ErrorCode::ParseError, std::string("model header: ") + e.what());
  }
  return c;
}

PartitionTree tree_from_header(const json& h) { return tree_from_json(h.at("tree").dump()); }

json sidecar_common(const PartitionTree& t, const DimensionPolicy& p, double precision, std::uint64_t id,
                    const char* variant) {
  json j;
  j["format"] = "gmra-model";
  j["version"] = kModelFormatVersion;
  j["variant"] = variant;
  std::ostringstream hex;
  hex << std::hex << id;
  j["model_id"] = hex.str();
  j["n"] = t.n_points;
  j["ambient_dim"] = t.ambient_dim;
  j["max_scale"] = t.max_scale;
  j["nodes"] = t.nodes.size();
  j["leaves"] = t.leaves().size();
  j["tree_method"] = to_string(t.method);
  j["seed"] = t.seed;
  j["policy"] = format_policy(p);
  j["precision"] = precision;
  return j;
}

}  // namespace

std::string format_policy(const DimensionPolicy& p) {
  std::string s = format_rule(p.rule);
  if (p.leaf) s += ";leaf=" + format_rule(*p.leaf);
  return s;
}

DimensionPolicy parse_policy(const std::string& text) {
  DimensionPolicy p;
  auto semi = text.find(';');
  p.rule = parse_rule(text.substr(0, semi), text);
  if (semi != std::string::npos) {
    std::string rest = text.substr(semi + 1);
    if (rest.rfind("leaf=", 0) != 0)
      throw GmraError(ErrorCode::ConfigError, "policy '" + text + "': expected ';leaf=<kind>:<value>'");
    p.leaf = parse_rule(rest.substr(5), text);
  }
  p.validate();
  return p;
}

std::string model_sidecar_json(const GmraModel& m) {
  json j = sidecar_common(m.tree, m.policy, m.precision, m.model_id, "gmra");
  j["tangential_corrections"] = m.options.tangential_corrections;
  j["split_shared_wavelets"] = m.options.split_shared_wavelets;
  json scales = json::array();
  for (const ScaleStats& s : scale_stats(m))
    scales.push_back({{"j", s.j},
                      {"cells", s.cells},
                      {"mean_dim", s.mean_dim},
                      {"mean_wavelet_dim", s.mean_wavelet_dim},
                      {"max_wavelet_dim", s.max_wavelet_dim}});
  j["scales"] = std::move(scales);
  return j.dump(2) + "\n";
}

std::string model_sidecar_json(const OrthoGmraModel& m) {
  json j = sidecar_common(m.tree, m.policy, m.precision, m.model_id, "orthogonal");
  int max_cum = 0;
  for (const OrthoNode& nd : m.nodes) max_cum = std::max(max_cum, nd.cum_dim);
  j["max_cumulative_dim"] = max_cum;
  return j.dump(2) + "\n";
}

void save_model(const GmraModel& m, const std::string& path) {
  json h;
  h["tree"] = json::parse(tree_to_json(m.tree));
  h["policy"] = format_policy(m.policy);
  h["precision"] = m.precision;
  h["options"] = {{"tangential_corrections", m.options.tangential_corrections},
                  {"split_shared_wavelets", m.options.split_shared_wavelets},
                  {"wavelet_rank_tol", m.options.wavelet_rank_tol},
                  {"intersection_angle_tol", m.options.intersection_angle_tol},
                  {"strict_dimension", m.options.strict_dimension}};
  json shapes = json::array();
  std::vector<double> payload;
  const Index D = m.ambient_dim();
  for (const GmraNode& nd : m.nodes) {
    shapes.push_back({{"d", nd.dim()},
                      {"dw", nd.wavelet_dim()},
                      {"spectrum", nd.spectrum.size()},
                      {"rank", nd.rank},
                      {"shared_dim", nd.shared_dim}});
    put(payload, nd.center.data(), D);
    put(payload, nd.phi.data(), nd.phi.size());
    put(payload, nd.sigma.data(), nd.sigma.size());
    put(payload, nd.spectrum.values.data(), nd.spectrum.size());
    put(payload, nd.psi.data(), nd.psi.size());
    put(payload, nd.w.data(), D);
  }
  h["shapes"] = std::move(shapes);
  write_container(path, ModelVariant::Gmra, m.model_id, h, payload, model_sidecar_json(m));
}

GmraModel load_model(const std::string& path) {
  Container c = read_container(path);
  if (c.variant != ModelVariant::Gmra)
    throw GmraError(ErrorCode::ModelMismatch, "'" + path + "' holds an orthogonal model");
  GmraModel m;
  try {
    const json& h = c.header;
    m.tree = tree_from_header(h);
    m.policy = parse_policy(h.at("policy").get<std::string>());
    m.precision = h.at("precision").get<double>();
    const json& o = h.at("options");
    m.options.tangential_corrections = o.at("tangential_corrections").get<bool>();
    m.options.split_shared_wavelets = o.at("split_shared_wavelets").get<bool>();
    m.options.wavelet_rank_tol = o.at("wavelet_rank_tol").get<double>();
    m.options.intersection_angle_tol = o.at("intersection_angle_tol").get<double>();
    m.options.strict_dimension = o.at("strict_dimension").get<bool>();
    const json& shapes = h.at("shapes");
    if (shapes.size() != m.tree.nodes.size()) throw GmraError(ErrorCode::ParseError, "node count mismatch");
    const Index D = m.tree.ambient_dim;
    Reader r(c.payload);
    m.nodes.resize(m.tree.nodes.size());
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
      const CellNode& cell = m.tree.nodes[i];
      GmraNode& nd = m.nodes[i];
      const json& s = shapes[i];
      nd.id = cell.id;
      nd.parent = cell.parent;
      nd.children = cell.children;
      nd.n_points = cell.size();
      Index d = s.at("d").get<Index>(), dw = s.at("dw").get<Index>();
      nd.rank = s.at("rank").get<int>();
      nd.shared_dim = s.at("shared_dim").get<int>();
      nd.center = r.vec(D);
      nd.phi = r.mat(D, d);
      nd.sigma = r.vec(d);
      nd.spectrum.values = r.vec(s.at("spectrum").get<Index>());
      nd.psi = r.mat(D, dw);
      nd.w = r.vec(D);
    }
    if (!r.done()) throw GmraError(ErrorCode::ParseError, "model payload has trailing values");
  } catch (const nlohmann::json::exception& e) {
    throw GmraError(ErrorCode::ParseError, std::string("model header: ") + e.what());
  }
  m.rebuild_caches();
  m.refresh_id();
  if (m.model_id != c.id) throw GmraError(ErrorCode::ParseError, "model id check failed for '" + path + "'");
  return m;
}

void save_model(const OrthoGmraModel& m, const std::string& path) {
  json h;
  h["tree"] = json::parse(tree_to_json(m.tree));
  h["policy"] = format_policy(m.policy);
  h["precision"] = m.precision;
  json shapes = json::array();
  std::vector<double> payload;
  const Index D = m.ambient_dim();
  for (const OrthoNode& nd : m.nodes) {
    shapes.push_back({{"r", nd.dim()}, {"cum_dim", nd.cum_dim}});
    put(payload, nd.center.data(), D);
    put(payload, nd.u.data(), nd.u.size());
    put(payload, nd.w.data(), D);
    payload.push_back(nd.residual_ms);
  }
  h["shapes"] = std::move(shapes);
  write_container(path, ModelVariant::Orthogonal, m.model_id, h, payload, model_sidecar_json(m));
}

OrthoGmraModel load_ortho_model(const std::string& path) {
  Container c = read_container(path);
  if (c.variant != ModelVariant::Orthogonal)
    throw GmraError(ErrorCode::ModelMismatch, "'" + path + "' holds a plain GMRA model");
  OrthoGmraModel m;
  try {
    const json& h = c.header;
    m.tree = tree_from_header(h);
    m.policy = parse_policy(h.at("policy").get<std::string>());
    m.precision = h.at("precision").get<double>();
    const json& shapes = h.at("shapes");
    if (shapes.size() != m.tree.nodes.size()) throw GmraError(ErrorCode::ParseError, "node count mismatch");
    const Index D = m.tree.ambient_dim;
    Reader r(c.payload);
    m.nodes.resize(m.tree.nodes.size());
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
      const CellNode& cell = m.tree.nodes[i];
      OrthoNode& nd = m.nodes[i];
      nd.id = cell.id;
      nd.parent = cell.parent;
      nd.children = cell.children;
      nd.n_points = cell.size();
      nd.cum_dim = shapes[i].at("cum_dim").get<int>();
      nd.center = r.vec(D);
      nd.u = r.mat(D, shapes[i].at("r").get<Index>());
      nd.w = r.vec(D);
      nd.residual_ms = r.vec(1)(0);
    }
    if (!r.done()) throw GmraError(ErrorCode::ParseError, "model payload has trailing values");
  } catch (const nlohmann::json::exception& e) {
    throw GmraError(ErrorCode::ParseError, std::string("model header: ") + e.what());
  }
  m.refresh_id();
  if (m.model_id != c.id) throw GmraError(ErrorCode::ParseError, "model id check failed for '" + path + "'");
  return m;
}

ModelVariant peek_model_variant(const std::string& path) { return read_container(path, true).variant; }

}  // namespace gmra
