#include "gmra/synth.hpp"

#include "gmra/parallel.hpp"
#include "gmra/random.hpp"

#include <cmath>
#include <numbers>

namespace gmra {

const char* to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::SwissRoll: return "swissroll";
    case GeneratorKind::SManifold: return "smanifold";
    case GeneratorKind::Oscillating2DWave: return "wave";
    case GeneratorKind::NoisySphere: return "sphere";
    case GeneratorKind::BandLimited: return "bandlimited";
  }
  return "unknown";
}

GeneratorKind generator_from_string(const std::string& s) {
  if (s == "swissroll" || s == "SwissRoll") return GeneratorKind::SwissRoll;
  if (s == "smanifold" || s == "SManifold") return GeneratorKind::SManifold;
  if (s == "wave" || s == "Oscillating2DWave") return GeneratorKind::Oscillating2DWave;
  if (s == "sphere" || s == "NoisySphere") return GeneratorKind::NoisySphere;
  if (s == "bandlimited" || s == "BandLimited") return GeneratorKind::BandLimited;
  throw GmraError(ErrorCode::SpecError, "unknown generator '" + s + "'");
}

Index GeneratorSpec::canonical_dim() const {
  switch (kind) {
    case GeneratorKind::NoisySphere: return sphere_dim + 1;
    case GeneratorKind::BandLimited: return D;
    default: return 3;
  }
}

void GeneratorSpec::validate() const {
  auto fail = [](const std::string& m) { throw GmraError(ErrorCode::SpecError, m); };
  if (n < 1) fail("n must be at least 1");
  if (!(noise >= 0.0) || !std::isfinite(noise)) fail("noise must be a finite value >= 0");
  if (kind == GeneratorKind::NoisySphere) {
    if (sphere_dim < 1) fail("sphere dimension must be at least 1");
    if (!(radius > 0.0)) fail("sphere radius must be positive");
  }
  if (kind == GeneratorKind::BandLimited) {
    if (D < 2) fail("band-limited samples need at least 2 grid points");
    if (band_width < 1) fail("band width must be at least 1");
    if (max_frequency < 0) fail("max frequency must be >= 0");
    if (2 * max_frequency >= D) fail("max frequency must be below D/2 so the cosines stay distinct on the grid");
  } else if (D < canonical_dim()) {
    fail("ambient dimension " + std::to_string(D) + " is below the canonical dimension " +
         std::to_string(canonical_dim()));
  }
}

Matrix random_isometry(Index D, Index m, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x69736f6dULL));
  Matrix g(D, m);
  for (Index i = 0; i < D; ++i)
    for (Index j = 0; j < m; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(D, m);
  Matrix r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  for (Index j = 0; j < m; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

namespace {

constexpr Index kChunk = 4096;

// Canonical sample and its parameters for one point.
void sample_point(const GeneratorSpec& s, Rng& rng, Eigen::Ref<Eigen::RowVectorXd> out,
                  Eigen::Ref<Eigen::RowVectorXd> par) {
  const double pi = std::numbers::pi;
  switch (s.kind) {
    case GeneratorKind::SwissRoll: {
      double t = rng.uniform(1.5 * pi, 4.5 * pi);
      double h = rng.uniform(0.0, 21.0);
      out << t * std::cos(t), h, t * std::sin(t);
      par << t, h;
      break;
    }
    case GeneratorKind::SManifold: {
      double t = rng.uniform(-1.5 * pi, 1.5 * pi);
      double h = rng.uniform(0.0, 2.0);
      double sg = t < 0 ? -1.0 : (t > 0 ? 1.0 : 0.0);
      out << std::sin(t), h, sg * (std::cos(t) - 1.0);
      par << t, h;
      break;
    }
    case GeneratorKind::Oscillating2DWave: {
      double u = rng.uniform(), v = rng.uniform();
      out << u, v, s.wave_amplitude * std::sin(s.wave_frequency * u);
      par << u, v;
      break;
    }
    case GeneratorKind::NoisySphere: {
      double nrm = 0.0;
      for (Index i = 0; i < out.size(); ++i) {
        out(i) = rng.normal();
        nrm += out(i) * out(i);
      }
      nrm = std::sqrt(nrm);
      while (nrm == 0.0) {  // measure zero; redraw
        nrm = 0.0;
        for (Index i = 0; i < out.size(); ++i) {
          out(i) = rng.normal();
          nrm += out(i) * out(i);
        }
        nrm = std::sqrt(nrm);
      }
      out *= s.radius / nrm;
      par = out.head(par.size());
      break;
    }
    case GeneratorKind::BandLimited: {
      const Index D = out.size();
      out.setZero();
      for (int f = 0; f <= s.max_frequency; ++f) {
        double mu = std::pow(2.0, -std::floor(static_cast<double>(f) / s.band_width) * s.alpha);
        double a = rng.normal(mu, mu / 5.0);
        par(f) = a;
        for (Index i = 0; i < D; ++i)
          out(i) += a * std::cos(static_cast<double>(f) * 2.0 * pi * static_cast<double>(i) / static_cast<double>(D));
      }
      break;
    }
  }
}

Index param_dim(const GeneratorSpec& s) {
  switch (s.kind) {
    case GeneratorKind::NoisySphere: return s.sphere_dim + 1;
    case GeneratorKind::BandLimited: return s.max_frequency + 1;
    default: return 2;
  }
}

}  // namespace

GeneratedData generate_full(const GeneratorSpec& spec) {
  spec.validate();
  const Index n = spec.n, D = spec.D, m = spec.canonical_dim();
  GeneratedData g;
  g.canonical.resize(n, m);
  g.params.resize(n, param_dim(spec));
  const bool band = spec.kind == GeneratorKind::BandLimited;
  g.embedding = band ? Matrix::Identity(D, D) : random_isometry(D, m, spec.embedding_seed.value_or(spec.seed));
  PointMatrix X(n, D);
  const double sd = spec.noise / std::sqrt(static_cast<double>(D));
  const std::size_t chunks = static_cast<std::size_t>((n + kChunk - 1) / kChunk);
  parallel_for(0, chunks, [&](std::size_t c) {
    Rng rng(mix_seed(spec.seed, 0x73616d70ULL, c));
    Rng noise_rng(mix_seed(spec.seed, 0x6e6f6973ULL, c));
    Index lo = static_cast<Index>(c) * kChunk, hi = std::min(n, lo + kChunk);
    for (Index i = lo; i < hi; ++i) {
      sample_point(spec, rng, g.canonical.row(i), g.params.row(i));
      if (band)
        X.row(i) = g.canonical.row(i);
      else
        X.row(i) = (g.embedding * g.canonical.row(i).transpose()).transpose();
      if (sd > 0.0)
        for (Index k = 0; k < D; ++k) X(i, k) += sd * noise_rng.normal();
    }
  });
  g.cloud = PointCloud(std::move(X), to_string(spec.kind));
  return g;
}

PointCloud generate(const GeneratorSpec& spec) { return generate_full(spec).cloud; }

}  // namespace gmra
