#pragma once

// Key transport: a list of keys sealed under another key with the toy cipher.
// Labels travel in the clear; only material is encrypted.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sentinel/bits.hpp"
#include "sentinel/crypto.hpp"
#include "sentinel/key.hpp"

namespace sentinel {

inline std::uint64_t seal_tweak(const KeyRef& ref) {
  return crypto::hash_string(ref.id, static_cast<std::uint64_t>(ref.version));
}

inline Bits seal_keys(const Key& encrypting_key, const std::vector<Key>& payload) {
  Bits plain;
  for (const auto& k : payload) plain = concat(plain, k.material);
  return crypto::encrypt(encrypting_key.material, seal_tweak(encrypting_key.ref()), plain);
}

// Splits the decrypted ciphertext into the payload's widths. A wrong key
// yields unrelated bits, never an error.
inline std::vector<Key> open_keys(const Bits& ciphertext, const std::vector<Key>& labels, const Key& key) {
  const Bits plain = crypto::decrypt(key.material, seal_tweak(key.ref()), ciphertext);
  std::vector<Key> out;
  std::size_t offset = 0;
  for (const auto& l : labels) {
    const auto width = l.material.size();
    Key k{l.id, l.version, Bits(plain.begin() + static_cast<std::ptrdiff_t>(offset),
                                plain.begin() + static_cast<std::ptrdiff_t>(offset + width))};
    out.push_back(std::move(k));
    offset += width;
  }
  return out;
}

} // namespace sentinel
