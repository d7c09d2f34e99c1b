#include "gmra/point_cloud.hpp"
#include "gmra/io_util.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace gmra {

CloudFormat format_from_path(const std::string& path) {
  auto ends_with = [&](const char* suf) {
    std::size_t m = std::strlen(suf);
    return path.size() >= m && path.compare(path.size() - m, m, suf) == 0;
  };
  if (ends_with(".csv") || ends_with(".txt")) return CloudFormat::Csv;
  return CloudFormat::Binary;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Returns false if some field is not a number at all (header detection).
bool parse_row(std::string_view line, std::vector<double>& out, std::size_t lineno, bool strict) {
  out.clear();
  std::size_t pos = 0;
  while (true) {
    std::size_t comma = line.find(',', pos);
    std::string_view field = trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
      if (!strict) return false;
      throw GmraError(ErrorCode::ParseError,
                      "line " + std::to_string(lineno) + ": malformed value '" + std::string(field) + "'");
    }
    if (!std::isfinite(v))
      throw GmraError(ErrorCode::ParseError,
                      "line " + std::to_string(lineno) + ": non-finite value '" + std::string(field) + "'");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return true;
}

}  // namespace

PointCloud parse_csv_cloud(const std::string& text) {
  std::vector<double> values;
  std::vector<double> row;
  Index cols = -1;
  Index nrows = 0;
  std::size_t lineno = 0;
  std::size_t start = 0;
  bool first_content = true;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line = trim(std::string_view(text).substr(start, end - start));
    ++lineno;
    start = end + 1;
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    bool numeric = parse_row(line, row, lineno, !first_content);
    if (first_content) {
      first_content = false;
      if (!numeric) continue;  // header
    }
    if (cols < 0) cols = static_cast<Index>(row.size());
    if (static_cast<Index>(row.size()) != cols)
      throw GmraError(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected " +
                                                 std::to_string(cols) + " columns, found " +
                                                 std::to_string(row.size()));
    values.insert(values.end(), row.begin(), row.end());
    ++nrows;
    if (end == text.size()) break;
  }
  if (nrows == 0) throw GmraError(ErrorCode::EmptyInput, "no points in CSV input");
  PointMatrix m = Eigen::Map<PointMatrix>(values.data(), nrows, cols);
  return PointCloud(std::move(m));
}

PointCloud load_cloud(const std::string& path, CloudFormat format) {
  if (format == CloudFormat::Csv) {
    PointCloud c = parse_csv_cloud(read_text_file(path));
    c.label = path;
    return c;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GmraError(ErrorCode::IoError, "cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCloudMagic, 8) != 0)
    throw GmraError(ErrorCode::ParseError, path + ": bad magic, not a point-cloud file");
  std::uint64_t n = read_u64(in), d = read_u64(in);
  if (!in) throw GmraError(ErrorCode::ParseError, path + ": truncated header");
  if (n == 0) throw GmraError(ErrorCode::EmptyInput, path + ": no points");
  PointMatrix m(static_cast<Index>(n), static_cast<Index>(d));
  read_f64_array(in, m.data(), static_cast<std::size_t>(n * d));
  if (!in) throw GmraError(ErrorCode::ParseError, path + ": truncated data");
  for (Index i = 0; i < m.size(); ++i)
    if (!std::isfinite(m.data()[i]))
      throw GmraError(ErrorCode::ParseError,
                      path + ": non-finite value at point " + std::to_string(i / m.cols()));
  return PointCloud(std::move(m), path);
}

PointCloud load_cloud(const std::string& path) { return load_cloud(path, format_from_path(path)); }

void save_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format) {
  if (format == CloudFormat::Csv) {
    std::ostringstream os;
    for (Index i = 0; i < cloud.n(); ++i) {
      for (Index j = 0; j < cloud.dim(); ++j) {
        if (j) os << ',';
        os << format_double(cloud.coords(i, j));
      }
      os << '\n';
    }
    write_text_file(path, os.str());
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw GmraError(ErrorCode::IoError, "cannot write " + path);
  out.write(kCloudMagic, 8);
  write_u64(out, static_cast<std::uint64_t>(cloud.n()));
  write_u64(out, static_cast<std::uint64_t>(cloud.dim()));
  write_f64_array(out, cloud.coords.data(), static_cast<std::size_t>(cloud.coords.size()));
  if (!out) throw GmraError(ErrorCode::IoError, "write failed: " + path);
}

void save_cloud(const PointCloud& cloud, const std::string& path) {
  save_cloud(cloud, path, format_from_path(path));
}

}  // namespace gmra
