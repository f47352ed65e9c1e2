#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>

#include "sentinel/bits.hpp"

namespace sentinel {

constexpr std::size_t kDefaultKeyBits = 64;

// Identity of one key version. Secrecy reasoning works entirely on these.
struct KeyRef {
  std::string id;
  int version = 0;

  auto operator<=>(const KeyRef&) const = default;
};

// Bare label for version 0, "label@v" otherwise.
inline std::string display(const KeyRef& ref) {
  return ref.version == 0 ? ref.id : ref.id + "@" + std::to_string(ref.version);
}

inline std::ostream& operator<<(std::ostream& os, const KeyRef& ref) { return os << display(ref); }

struct Key {
  std::string id;
  int version = 0;
  Bits material;

  KeyRef ref() const { return {id, version}; }
  bool operator==(const Key&) const = default;
};

using Rng = std::mt19937_64;

inline Bits random_bits(Rng& rng, std::size_t n) {
  Bits out;
  out.reserve(n);
  while (out.size() < n) {
    const std::uint64_t word = rng();
    for (int i = 63; i >= 0 && out.size() < n; --i) out.push_back((word >> i) & 1U);
  }
  return out;
}

inline Key make_key(std::string id, int version, Rng& rng, std::size_t bits = kDefaultKeyBits) {
  return Key{std::move(id), version, random_bits(rng, bits)};
}

} // namespace sentinel
