// SPDX-License-Identifier: Apache-2.0
//
// Bit-level IEEE binary16 conversion. Half values are stored as f32 floats
// that are exactly representable in f16; these routines implement the
// round-to-nearest-even quantization contract.

#pragma once

#include <bit>
#include <cstdint>

namespace trainc {

inline std::uint16_t float_to_half_bits(float f) {
  std::uint32_t x = std::bit_cast<std::uint32_t>(f);
  std::uint32_t sign = (x >> 16) & 0x8000u;
  std::uint32_t exp = (x >> 23) & 0xffu;
  std::uint32_t man = x & 0x7fffffu;

  if (exp == 0xffu) {
    if (man == 0) return static_cast<std::uint16_t>(sign | 0x7c00u);
    // NaN: keep the top payload bits, force at least one mantissa bit.
    std::uint32_t payload = man >> 13;
    if (payload == 0) payload = 1;
    return static_cast<std::uint16_t>(sign | 0x7c00u | payload);
  }

  int e = static_cast<int>(exp) - 127 + 15;
  if (e >= 31) return static_cast<std::uint16_t>(sign | 0x7c00u);  // overflow
  if (e <= 0) {
    if (e < -11) return static_cast<std::uint16_t>(sign);  // underflow
    std::uint32_t m = man | 0x800000u;
    int shift = 14 - e;  // 13 bits for mantissa narrowing plus denorm shift
    std::uint32_t half = m >> shift;
    std::uint32_t rem = m & ((1u << shift) - 1u);
    std::uint32_t threshold = 1u << (shift - 1);
    if (rem > threshold || (rem == threshold && (half & 1u))) half++;
    return static_cast<std::uint16_t>(sign | half);
  }

  std::uint32_t half = sign | (static_cast<std::uint32_t>(e) << 10) | (man >> 13);
  std::uint32_t rem = man & 0x1fffu;
  if (rem > 0x1000u || (rem == 0x1000u && (half & 1u))) half++;  // may carry into exp
  return static_cast<std::uint16_t>(half);
}

inline float half_bits_to_float(std::uint16_t h) {
  std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
  std::uint32_t exp = (h >> 10) & 0x1fu;
  std::uint32_t man = h & 0x3ffu;
  std::uint32_t out;
  if (exp == 0x1fu) {
    out = sign | 0x7f800000u | (man << 13);
  } else if (exp == 0) {
    if (man == 0) {
      out = sign;
    } else {
      int shift = 0;
      while (!(man & 0x400u)) {
        man <<= 1;
        ++shift;
      }
      man &= 0x3ffu;
      out = sign | (static_cast<std::uint32_t>(113 - shift) << 23) | (man << 13);
    }
  } else {
    out = sign | ((exp - 15 + 127) << 23) | (man << 13);
  }
  return std::bit_cast<float>(out);
}

/// Quantize an f32 value onto the f16 grid (round-to-nearest-even),
/// returning the result widened back to f32.
inline float quantize_f16(float f) {
  return half_bits_to_float(float_to_half_bits(f));
}

}  // namespace trainc
