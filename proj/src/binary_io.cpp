#include "swerom/binary_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>

namespace swerom::io {

namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

std::array<char, 8> padded(std::string_view m) {
  std::array<char, 8> buf{};
  std::memcpy(buf.data(), m.data(), std::min<std::size_t>(m.size(), 8));
  return buf;
}

}  // namespace

BinaryWriter::BinaryWriter(const std::string& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error("cannot open '" + path + "' for writing");
}

void BinaryWriter::magic(std::string_view m) {
  const auto buf = padded(m);
  out_.write(buf.data(), buf.size());
}

void BinaryWriter::u64(std::uint64_t v) {
  v = to_little(v);
  out_.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void BinaryWriter::i64(std::int64_t v) {
  v = to_little(v);
  out_.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void BinaryWriter::f64(double v) {
  v = to_little(v);
  out_.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void BinaryWriter::doubles(const double* data, Index count) {
  if constexpr (std::endian::native == std::endian::little) {
    out_.write(reinterpret_cast<const char*>(data),
               static_cast<std::streamsize>(count * sizeof(double)));
  } else {
    for (Index i = 0; i < count; ++i) f64(data[i]);
  }
}

void BinaryWriter::close() {
  out_.flush();
  if (!out_) throw Error("write to '" + path_ + "' failed");
  out_.close();
}

BinaryReader::BinaryReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw FileFormatError("cannot open '" + path + "'");
}

void BinaryReader::read_raw(char* dst, std::size_t count) {
  in_.read(dst, static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in_.gcount()) != count)
    throw FileFormatError("'" + path_ + "' is truncated");
}

void BinaryReader::expect_magic(std::string_view m) {
  std::array<char, 8> buf{};
  read_raw(buf.data(), buf.size());
  if (buf != padded(m))
    throw FileFormatError("'" + path_ + "': bad magic, expected " + std::string(m));
}

std::uint64_t BinaryReader::u64() {
  std::uint64_t v;
  read_raw(reinterpret_cast<char*>(&v), sizeof v);
  return to_little(v);
}

std::int64_t BinaryReader::i64() {
  std::int64_t v;
  read_raw(reinterpret_cast<char*>(&v), sizeof v);
  return to_little(v);
}

double BinaryReader::f64() {
  double v;
  read_raw(reinterpret_cast<char*>(&v), sizeof v);
  return to_little(v);
}

void BinaryReader::doubles(double* data, Index count) {
  read_raw(reinterpret_cast<char*>(data), static_cast<std::size_t>(count) * sizeof(double));
  if constexpr (std::endian::native != std::endian::little)
    for (Index i = 0; i < count; ++i) data[i] = to_little(data[i]);
}

Matrix BinaryReader::matrix(Index rows, Index cols) {
  Matrix m(rows, cols);
  doubles(m.data(), m.size());
  return m;
}

Vector BinaryReader::vector(Index size) {
  Vector v(size);
  doubles(v.data(), v.size());
  return v;
}

bool BinaryReader::at_end() { return in_.peek() == std::char_traits<char>::eof(); }

}  // namespace swerom::io
