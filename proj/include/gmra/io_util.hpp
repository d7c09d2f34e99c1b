#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>

namespace gmra {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// Little-endian binary helpers.
void write_u64(std::ostream& out, std::uint64_t v);
std::uint64_t read_u64(std::istream& in);
void write_f64_array(std::ostream& out, const double* data, std::size_t count);
void read_f64_array(std::istream& in, double* data, std::size_t count);

// 64-bit FNV-1a over raw bytes; used for model ids.
class Fnv1a {
 public:
  void bytes(const void* p, std::size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 1099511628211ULL;
    }
  }
  void integer(std::int64_t v) { bytes(&v, sizeof v); }
  void doubles(const double* p, std::size_t n) { bytes(p, n * sizeof(double)); }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 1469598103934665603ULL;
};

}  // namespace gmra
