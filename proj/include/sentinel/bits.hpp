#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sentinel/errors.hpp"

namespace sentinel {

using Bits = std::vector<bool>;

inline Bits bits_from_string(std::string_view text) {
  Bits out;
  out.reserve(text.size());
  for (char c : text) {
    if (c != '0' && c != '1') {
      throw DomainError("bit string may contain only '0' and '1'");
    }
    out.push_back(c == '1');
  }
  return out;
}

inline std::string to_string(const Bits& bits) {
  std::string out;
  out.reserve(bits.size());
  for (bool b : bits) out.push_back(b ? '1' : '0');
  return out;
}

// Most significant bit first.
inline Bits bits_from_u64(std::uint64_t value, std::size_t width) {
  Bits out(width);
  for (std::size_t i = 0; i < width; ++i) {
    const std::size_t shift = width - 1 - i;
    out[i] = shift < 64 && ((value >> shift) & 1U);
  }
  return out;
}

inline std::uint64_t bits_to_u64(const Bits& bits) {
  if (bits.size() > 64) throw DomainError("bit vector wider than 64 bits");
  std::uint64_t v = 0;
  for (bool b : bits) v = (v << 1) | (b ? 1U : 0U);
  return v;
}

inline std::size_t popcount(const Bits& bits) {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), true));
}

inline Bits concat(const Bits& a, const Bits& b) {
  Bits out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline Bits xor_bits(const Bits& a, const Bits& b) {
  if (a.size() != b.size()) throw DomainError("xor of bit vectors with different lengths");
  Bits out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] != b[i];
  return out;
}

} // namespace sentinel
