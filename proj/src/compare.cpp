#include "gmra/compare.hpp"

#include "gmra/io_util.hpp"
#include "gmra/transforms.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace gmra {

EncodingCost gmra_dictionary_cost(const GmraModel& m) {
  EncodingCost c;
  const Index D = m.ambient_dim();
  for (const GmraNode& nd : m.nodes) {
    c.dictionary_cost += D * nd.wavelet_dim() + D;
    if (nd.parent >= 0 && m.options.tangential_corrections) c.dictionary_cost += D * nd.dim();
  }
  c.finish();
  return c;
}

EncodingCost ortho_dictionary_cost(const OrthoGmraModel& m) {
  EncodingCost c;
  const Index D = m.ambient_dim();
  for (const OrthoNode& nd : m.nodes) c.dictionary_cost += D * nd.dim() + D;
  c.finish();
  return c;
}

namespace {

double relative_of(const PointCloud& cloud, const std::vector<double>& errors) {
  double s = 0.0;
  for (Index i = 0; i < cloud.n(); ++i) {
    double nx = cloud.coords.row(i).norm(), e = errors[static_cast<std::size_t>(i)];
    double t = nx > 0 ? e / nx : (e == 0 ? 0.0 : std::numeric_limits<double>::infinity());
    s += t * t;
  }
  return cloud.n() ? std::sqrt(s / static_cast<double>(cloud.n())) : 0.0;
}

CostPoint from_report(const ThresholdReport& r, const EncodingCost& dict, const PointCloud& cloud) {
  CostPoint p;
  p.parameter = r.delta;
  p.cost.coefficient_cost = r.kept;
  p.cost.dictionary_cost = dict.dictionary_cost;
  p.cost.finish();
  p.rms_error = r.rms_error;
  p.relative_error = relative_of(cloud, r.errors);
  return p;
}

}  // namespace

std::vector<CostPoint> gmra_threshold_curve(const GmraModel& m, const PointCloud& cloud,
                                            const std::vector<double>& deltas) {
  std::vector<GwtCoefficients> coeffs = fgwt_all(m, cloud);
  EncodingCost dict = gmra_dictionary_cost(m);
  std::vector<CostPoint> out;
  for (double d : deltas) out.push_back(from_report(threshold_coefficients(m, coeffs, d, cloud.coords), dict, cloud));
  return out;
}

std::vector<CostPoint> ortho_threshold_curve(const OrthoGmraModel& m, const PointCloud& cloud,
                                             const std::vector<double>& deltas) {
  std::vector<OrthoCoefficients> coeffs = ortho_fgwt_all(m, cloud);
  EncodingCost dict = ortho_dictionary_cost(m);
  std::vector<CostPoint> out;
  for (double d : deltas) out.push_back(from_report(ortho_threshold(m, coeffs, d, cloud.coords), dict, cloud));
  return out;
}

std::vector<CostPoint> pruned_curve(const PointCloud& cloud, const PartitionTree& tree,
                                    const std::vector<double>& eps_grid) {
  std::vector<CostPoint> out;
  for (double eps : eps_grid) {
    PrunedForest f = prune(cloud, tree, eps);
    PointMatrix rec = forest_reconstruct(f, cloud);
    CostPoint p;
    p.parameter = eps;
    p.cost = f.total_cost();
    p.rms_error = rms_error(cloud, rec);
    p.relative_error = relative_rms_error(cloud, rec);
    p.histogram = f.strategy_histogram();
    out.push_back(p);
  }
  return out;
}

std::vector<MethodCurve> compare_encoders(const PointCloud& cloud, const PartitionTree& tree,
                                          const CompareOptions& opt) {
  std::vector<MethodCurve> out;
  GmraModel m = construct_gmra(cloud, tree, opt.policy);
  out.push_back({"gmra", gmra_threshold_curve(m, cloud, opt.deltas)});
  OrthoGmraModel o = construct_ortho(cloud, tree, opt.policy, opt.ortho_precision);
  out.push_back({"ortho", ortho_threshold_curve(o, cloud, opt.deltas)});
  out.push_back({"pruned", pruned_curve(cloud, tree, opt.eps_grid)});
  out.push_back({"svd", svd_baseline(cloud, opt.svd_max_rank)});
  out.push_back({"svd_threshold", svd_threshold_baseline(cloud, opt.deltas)});
  return out;
}

std::string compare_csv(const std::vector<MethodCurve>& curves) {
  std::ostringstream os;
  bool header = true;
  for (const MethodCurve& c : curves) {
    std::istringstream body(cost_curve_csv(c.points));
    std::string line;
    bool first = true;
    while (std::getline(body, line)) {
      if (first) {
        first = false;
        if (header) os << "method," << line << '\n';
        header = false;
        continue;
      }
      os << c.method << ',' << line << '\n';
    }
  }
  return os.str();
}

double min_coefficient_cost_at(const std::vector<CostPoint>& pts, double err) {
  double best = std::numeric_limits<double>::infinity();
  for (const CostPoint& p : pts)
    if (p.rms_error <= err) best = std::min(best, static_cast<double>(p.cost.coefficient_cost));
  return best;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0) || !(hi >= lo) || n < 1) throw GmraError(ErrorCode::ConfigError, "bad log grid");
  std::vector<double> g;
  if (n == 1) return {lo};
  for (int i = 0; i < n; ++i) g.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1)));
  return g;
}

}  // namespace gmra
