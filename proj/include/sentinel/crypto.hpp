#pragma once

// Toy keyed transform used wherever the protocols need "encrypt", "mask" or
// "PRF". It is deterministic and cheap; it is not a cipher. Secrecy arguments
// in this library rest on key-closure analysis, so any keyed permutation with
// the same signatures can replace it.

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "sentinel/bits.hpp"

namespace sentinel::crypto {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Folds a bit vector (and its length) into a 64-bit state.
inline std::uint64_t absorb(const Bits& input, std::uint64_t seed = 0) {
  std::uint64_t state = splitmix64(seed ^ 0x5EED5EED5EED5EEDULL);
  std::uint64_t word = 0;
  std::size_t filled = 0;
  for (bool b : input) {
    word = (word << 1) | (b ? 1U : 0U);
    if (++filled == 64) {
      state = splitmix64(state ^ word);
      word = 0;
      filled = 0;
    }
  }
  state = splitmix64(state ^ word ^ (static_cast<std::uint64_t>(filled) << 56));
  return splitmix64(state ^ static_cast<std::uint64_t>(input.size()));
}

inline std::uint64_t hash_string(std::string_view text, std::uint64_t seed = 0) {
  std::uint64_t state = splitmix64(seed ^ text.size());
  for (unsigned char c : text) state = splitmix64(state ^ c);
  return state;
}

inline std::uint64_t prf_u64(const Bits& key, std::uint64_t tweak) {
  return splitmix64(absorb(key) ^ splitmix64(tweak));
}

inline Bits keystream(const Bits& key, std::uint64_t tweak, std::size_t n) {
  Bits out;
  out.reserve(n);
  std::uint64_t state = prf_u64(key, tweak);
  while (out.size() < n) {
    state = splitmix64(state);
    for (int i = 63; i >= 0 && out.size() < n; --i) out.push_back((state >> i) & 1U);
  }
  return out;
}

// Output-length-n pseudorandom expansion of an arbitrary input.
inline Bits prf_bits(const Bits& input, std::size_t n) { return keystream(input, 0xC0DEC0DEULL, n); }

inline Bits encrypt(const Bits& key, std::uint64_t tweak, const Bits& plaintext) {
  return xor_bits(plaintext, keystream(key, tweak, plaintext.size()));
}

inline Bits decrypt(const Bits& key, std::uint64_t tweak, const Bits& ciphertext) {
  return encrypt(key, tweak, ciphertext);
}

} // namespace sentinel::crypto
