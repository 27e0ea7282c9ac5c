#pragma once

#include <bit>
#include <cstdint>

namespace tripletclass {

// IEEE 754 binary16 conversion, round to nearest, ties to even.
// Used to emulate float16 tensor storage: values are rounded through
// binary16 on store while all arithmetic stays in float32.

inline std::uint16_t float_to_half_bits(float value) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(value);
  const std::uint16_t sign = static_cast<std::uint16_t>((bits >> 16) & 0x8000u);
  bits &= 0x7fffffffu;

  if (bits >= 0x7f800000u) {  // inf / NaN (NaN keeps a quiet payload)
    return bits > 0x7f800000u ? static_cast<std::uint16_t>(sign | 0x7e00u)
                              : static_cast<std::uint16_t>(sign | 0x7c00u);
  }
  if (bits >= 0x38800000u) {  // normal half range, |v| >= 2^-14
    bits += 0x00000fffu + ((bits >> 13) & 1u);
    if (bits >= 0x47800000u) return sign | 0x7c00u;  // rounded past 65504
    return sign | static_cast<std::uint16_t>((bits - 0x38000000u) >> 13);
  }
  if (bits < 0x33000000u) return sign;  // below 2^-25: underflows to zero

  // subnormal half: quantize |v| to multiples of 2^-24
  const std::uint32_t shift = 126u - (bits >> 23);
  const std::uint32_t mant = (bits & 0x007fffffu) | 0x00800000u;
  std::uint32_t q = mant >> shift;
  const std::uint32_t rem = mant & ((1u << shift) - 1u);
  const std::uint32_t halfway = 1u << (shift - 1);
  if (rem > halfway || (rem == halfway && (q & 1u))) ++q;
  return sign | static_cast<std::uint16_t>(q);
}

inline float half_bits_to_float(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
  const std::uint32_t exp = (h >> 10) & 0x1fu;
  const std::uint32_t mant = h & 0x3ffu;
  if (exp == 31u) {
    return std::bit_cast<float>(sign | 0x7f800000u | (mant << 13));
  }
  if (exp == 0u) {
    const float v = static_cast<float>(mant) * 0x1p-24f;
    return (h & 0x8000u) ? -v : v;
  }
  return std::bit_cast<float>(sign | ((exp + 112u) << 23) | (mant << 13));
}

/// Rounds a float32 through binary16 and back.
inline float quantize_half(float value) {
  return half_bits_to_float(float_to_half_bits(value));
}

}  // namespace tripletclass
