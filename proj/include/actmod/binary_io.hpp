#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "actmod/errors.hpp"

// Little-endian primitives shared by the feature-store and checkpoint codecs.
namespace actmod::binary {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

inline void write_f64(std::ostream& os, double v) {
  write_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void read_exact(std::istream& is, char* dst, std::size_t n,
                       const char* what) {
  is.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw CorruptionError(std::string("truncated input while reading ") + what);
}

inline std::uint32_t read_u32(std::istream& is, const char* what = "u32") {
  unsigned char b[4];
  read_exact(is, reinterpret_cast<char*>(b), 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t read_u64(std::istream& is, const char* what = "u64") {
  unsigned char b[8];
  read_exact(is, reinterpret_cast<char*>(b), 8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double read_f64(std::istream& is, const char* what = "f64") {
  return std::bit_cast<double>(read_u64(is, what));
}

inline std::string read_string(std::istream& is, std::uint32_t max_len,
                               const char* what = "string") {
  const std::uint32_t n = read_u32(is, what);
  if (n > max_len)
    throw CorruptionError(std::string("implausible length for ") + what);
  std::string s(n, '\0');
  read_exact(is, s.data(), n, what);
  return s;
}

}  // namespace actmod::binary
