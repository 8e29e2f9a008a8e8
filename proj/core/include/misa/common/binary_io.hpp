#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

namespace misa::io {

template <typename Float, typename Bits>
void write_le(std::ostream& out, Float value) {
  static_assert(sizeof(Float) == sizeof(Bits));
  Bits bits = std::bit_cast<Bits>(value);
  unsigned char bytes[sizeof(Bits)];
  for (std::size_t i = 0; i < sizeof(Bits); ++i) {
    bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(Bits));
}

template <typename Float, typename Bits>
Float decode_le(const unsigned char* bytes) {
  Bits bits = 0;
  for (std::size_t i = 0; i < sizeof(Bits); ++i) bits |= static_cast<Bits>(bytes[i]) << (8 * i);
  return std::bit_cast<Float>(bits);
}

inline void write_f64(std::ostream& out, double v) { write_le<double, std::uint64_t>(out, v); }
inline void write_f32(std::ostream& out, float v) { write_le<float, std::uint32_t>(out, v); }

// Returns false on short read.
inline bool read_f64(std::istream& in, double& v) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) return false;
  v = decode_le<double, std::uint64_t>(bytes);
  return true;
}

inline float decode_f32(const unsigned char* bytes) { return decode_le<float, std::uint32_t>(bytes); }

}  // namespace misa::io
