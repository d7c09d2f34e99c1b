#pragma once

#include "gmra/point_cloud.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace gmra {

enum class GeneratorKind { SwissRoll, SManifold, Oscillating2DWave, NoisySphere, BandLimited };

const char* to_string(GeneratorKind k);
GeneratorKind generator_from_string(const std::string& s);

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::SwissRoll;
  Index n = 1000;
  Index D = 50;
  double noise = 0.0;  // sigma; each ambient coordinate gets N(0, (sigma/sqrt(D))^2)
  std::uint64_t seed = 0;
  // Seed of the random embedding; defaults to `seed`. Fix it to draw fresh samples of the
  // same embedded manifold.
  std::optional<std::uint64_t> embedding_seed;

  int sphere_dim = 2;  // NoisySphere: S^d in R^(d+1)
  double radius = 1.0;

  double wave_amplitude = 0.5;  // Oscillating2DWave: (u, v, A sin(omega u)), u, v in [0, 1]
  double wave_frequency = 6.283185307179586;

  int band_width = 4;      // BandLimited: frequencies f share the mean 2^(-floor(f/band_width) alpha)
  double alpha = 1.0;
  int max_frequency = 24;  // coefficients for f = 0..max_frequency

  void validate() const;
  // Dimension of the canonical coordinates before embedding (D for BandLimited).
  Index canonical_dim() const;
};

struct GeneratedData {
  PointCloud cloud;
  PointMatrix canonical;  // n x canonical_dim, noise free
  PointMatrix params;     // intrinsic parameters (t, h), (u, v), ... or band coefficients
  Matrix embedding;       // D x canonical_dim with orthonormal columns (identity for BandLimited)
};

GeneratedData generate_full(const GeneratorSpec& spec);
PointCloud generate(const GeneratorSpec& spec);

// Random D x m matrix with orthonormal columns (QR of a Gaussian matrix, R with positive diagonal).
Matrix random_isometry(Index D, Index m, std::uint64_t seed);

}  // namespace gmra
