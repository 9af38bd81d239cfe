#pragma once

// Little-endian binary streams shared by the snapshot, basis, tensor and DEIM
// file formats.

#include "swerom/types.hpp"

#include <fstream>
#include <string>
#include <string_view>

namespace swerom::io {

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path);
  void magic(std::string_view m);  // padded to 8 bytes
  void u64(std::uint64_t v);
  void i64(std::int64_t v);
  void f64(double v);
  void doubles(const double* data, Index count);
  void matrix(const Matrix& m) { doubles(m.data(), m.size()); }
  void vector(const Vector& v) { doubles(v.data(), v.size()); }
  void close();

 private:
  std::string path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path);
  // Throws FileFormatError if the next 8 bytes are not `m` (zero padded).
  void expect_magic(std::string_view m);
  std::uint64_t u64();
  std::int64_t i64();
  double f64();
  void doubles(double* data, Index count);
  Matrix matrix(Index rows, Index cols);
  Vector vector(Index size);
  bool at_end();

 private:
  void read_raw(char* dst, std::size_t count);
  std::string path_;
  std::ifstream in_;
};

}  // namespace swerom::io
