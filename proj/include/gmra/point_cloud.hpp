#pragma once

#include "gmra/types.hpp"

#include <string>

namespace gmra {

struct PointCloud {
  PointMatrix coords;  // n x D
  std::string label;

  PointCloud() = default;
  PointCloud(PointMatrix c, std::string l = {}) : coords(std::move(c)), label(std::move(l)) {}

  Index n() const { return coords.rows(); }
  Index dim() const { return coords.cols(); }
  Vector point(Index i) const { return coords.row(i).transpose(); }
};

enum class CloudFormat { Csv, Binary };

// Binary layout: 8-byte magic "GMRAPC01", uint64 n, uint64 D, then n*D little-endian
// float64 values in row-major order.
inline constexpr char kCloudMagic[9] = "GMRAPC01";

CloudFormat format_from_path(const std::string& path);

PointCloud load_cloud(const std::string& path, CloudFormat format);
PointCloud load_cloud(const std::string& path);
void save_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format);
void save_cloud(const PointCloud& cloud, const std::string& path);

// CSV parsing of an in-memory string; the first line is skipped if it is not numeric.
PointCloud parse_csv_cloud(const std::string& text);

}  // namespace gmra
